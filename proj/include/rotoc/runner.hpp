#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotoc/analysis.hpp"
#include "rotoc/control.hpp"
#include "rotoc/rotor.hpp"

namespace rotoc {

/// Lists whose Cartesian product defines a sweep. An empty list stands for
/// the single value of the base configuration.
struct SweepAxes {
  std::vector<double> alpha;
  std::vector<double> tau_ns;
  std::vector<OrientationAxis> axis;

  std::size_t size() const {
    return std::max<std::size_t>(1, alpha.size()) * std::max<std::size_t>(1, tau_ns.size()) *
           std::max<std::size_t>(1, axis.size());
  }
};

/// Everything a run needs. Keys of the JSON form mirror the field names; see
/// README for the schema.
struct RunConfig {
  std::string molecule = "cpc";  // "cpc" or a molecule file
  int jmax = 9;
  int m = 0;
  KrotovConfig krotov;  // target axis, initial state, mask, dt, iteration control, guess
  std::filesystem::path output_dir = "run";
  double spectrum_max_ghz = 40.0;
  std::size_t record_stride = 10;  // trajectory.csv keeps every n-th node
  SweepAxes sweep;
  int parallelism = 0;  // sweep workers; 0 = all cores

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Pretty-printed JSON that parse_run_config reads back unchanged.
std::string run_config_json(const RunConfig& config);

struct RunSummary {
  std::string status;  // converged | max_iterations | dry_run | error
  std::string message;
  OrientationAxis target_axis = OrientationAxis::z;
  double alpha = 0.0;
  double tau_ns = 0.0;
  double cos_z = 0.0;
  double cos_x = 0.0;
  double cos_mu = 0.0;
  double penalty = 0.0;
  double observable = 0.0;
  double peak_field_kvcm = 0.0;
  double fluence = 0.0;  // (kV/cm)^2 ns
  int iterations = 0;
  int rejected = 0;
  double guess_frequency_ghz = 0.0;
  double wall_time_s = 0.0;

  bool ok() const { return status == "converged" || status == "max_iterations"; }
  /// Final orientation along the optimized axis.
  double target_value() const;
};

std::string summary_json(const RunSummary& summary);
RunSummary parse_summary(const std::string& json_text);

/// One optimization. Writes config.json, history.csv, field.csv,
/// trajectory.csv, the field and orientation spectra and summary.json into
/// config.output_dir. Optimization failures end up in the summary; I/O
/// failures throw. dry_run validates and touches nothing.
RunSummary run_single(const RunConfig& config, bool dry_run = false);
/// Same, reusing prebuilt operators (must match config.molecule/jmax/m).
RunSummary run_single(const RotorSystem& system, const RunConfig& config, bool dry_run = false);

struct SweepPoint {
  double alpha = 0.0;
  double tau_ns = 0.0;
  OrientationAxis axis = OrientationAxis::z;
  std::filesystem::path directory;
  RunSummary summary;
};

/// Expands config.sweep (missing lists fall back to the single value in
/// config.krotov) into fully specified points, alpha-major.
std::vector<SweepPoint> sweep_points(const RunConfig& config);

/// Runs every point, `parallelism` at a time, each into its own
/// subdirectory, then writes sweep.csv and fig5.dat. A failing point is
/// marked in the table and does not stop the others.
std::vector<SweepPoint> run_sweep(const RunConfig& config, bool dry_run = false, std::ostream* log = nullptr);

/// CSV: alpha,tau_ns,axis,status,cos_z,cos_x,cos_mu,peak_field_kvcm,fluence,iterations,wall_time_s,directory
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points);
/// Blocks per (axis, tau), blank-line separated: alpha orientation.
void write_fig5_dat(const std::filesystem::path& path, const std::vector<SweepPoint>& points);

/// CSV: lower,upper,frequency_ghz,axis,strength
void write_line_list_csv(const std::filesystem::path& path, const LineList& lines);

/// Propagates the initial state of `config` under a stored field file and
/// writes trajectory.csv, orientation spectra and summary.json.
RunSummary run_propagate(const RunConfig& config, const std::filesystem::path& field_csv, bool dry_run = false);

/// Recomputes spectra (with assignments) from a run directory holding
/// config.json, field.csv and trajectory.csv. Returns the files written.
std::vector<std::filesystem::path> analyze_run(const std::filesystem::path& directory,
                                               double max_frequency_ghz = 0.0);

}  // namespace rotoc
