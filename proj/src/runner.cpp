#include "rotoc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

namespace rotoc {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void take(const json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc.at(key).get<T>();
}

void reject_unknown(const json& doc, std::initializer_list<const char*> keys, const std::string& where) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'" + where);
  }
}

// Every series the runner writes for one trajectory: a spectrum file and a
// peak table per orientation axis.
std::vector<std::filesystem::path> write_orientation_spectra(const std::filesystem::path& dir,
                                                             const Trajectory& traj, const LineList& lines,
                                                             double window, double fmax) {
  std::vector<std::filesystem::path> written;
  for (auto axis : {OrientationAxis::z, OrientationAxis::x, OrientationAxis::mu}) {
    auto spec = assign_peaks(trajectory_spectrum(traj, axis, fmax), lines, window);
    const std::string stem = "cos_" + to_string(axis);
    written.push_back(dir / ("spectrum_" + stem + ".csv"));
    write_spectrum_csv(written.back(), spec);
    written.push_back(dir / ("peaks_" + stem + ".csv"));
    write_peaks_csv(written.back(), spec);
  }
  return written;
}

std::vector<std::filesystem::path> write_field_spectrum(const std::filesystem::path& dir, const ControlField& field,
                                                        const LineList& lines, double window, double fmax) {
  auto spec = assign_peaks(power_spectrum(field.samples(), field.dt(), fmax), lines, window);
  std::vector<std::filesystem::path> written{dir / "field_spectrum.csv", dir / "field_spectrum.dat",
                                             dir / "field_peaks.csv"};
  write_spectrum_csv(written[0], spec);
  write_spectrum_dat(written[1], spec);
  write_peaks_csv(written[2], spec);
  return written;
}

Trajectory thinned(const Trajectory& traj, std::size_t stride) {
  if (stride <= 1) return traj;
  Trajectory out;
  out.final_state = traj.final_state;
  for (std::size_t i = 0; i < traj.samples.size(); i += stride) out.samples.push_back(traj.samples[i]);
  if ((traj.samples.size() - 1) % stride != 0) out.samples.push_back(traj.samples.back());
  return out;
}

double fluence_of(const ControlField& field) {
  double sum = 0.0;
  for (double e : field.samples()) sum += e * e;
  return sum * field.dt();
}

double peak_of(const ControlField& field) {
  double peak = 0.0;
  for (double e : field.samples()) peak = std::max(peak, std::abs(e));
  return peak;
}

LineList run_lines(const RotorSystem& system) {
  const auto sol = field_free_eigensolve(system.molecule(), system.basis());
  return transition_line_list(sol, {CosineAxis::z, CosineAxis::x});
}

std::string point_name(const SweepPoint& p) {
  std::ostringstream s;
  s << "alpha" << p.alpha << "_tau" << p.tau_ns << '_' << to_string(p.axis);
  return s.str();
}

}  // namespace

void RunConfig::validate() const {
  if (jmax < 0) throw std::invalid_argument("config: jmax must be non-negative");
  if (std::abs(m) > jmax) throw std::invalid_argument("config: |m| exceeds jmax");
  if (krotov.initial_state.m != m) throw std::invalid_argument("config: initial state M differs from m");
  if (krotov.initial_state.j > jmax) throw std::invalid_argument("config: initial state outside the basis");
  krotov.mask.validate();
  if (!(krotov.dt > 0.0)) throw std::invalid_argument("config: dt_ns must be positive");
  if (krotov.lanczos.max_krylov_dim < 2) throw std::invalid_argument("config: max_krylov_dim must be >= 2");
  if (krotov.max_iterations < 0) throw std::invalid_argument("config: max_iterations must be >= 0");
  if (krotov.patience < 1) throw std::invalid_argument("config: patience must be >= 1");
  if (record_stride == 0) throw std::invalid_argument("config: record_stride must be >= 1");
  if (!(spectrum_max_ghz >= 0.0)) throw std::invalid_argument("config: spectrum_max_ghz must be >= 0");
  if (parallelism < 0) throw std::invalid_argument("config: parallelism must be >= 0");
  for (double a : sweep.alpha) {
    if (!(a > 0.0)) throw std::invalid_argument("config: sweep alpha values must be positive");
  }
  for (double t : sweep.tau_ns) {
    if (!(t > 0.0)) throw std::invalid_argument("config: sweep tau values must be positive");
  }
}

RunConfig parse_run_config(const std::string& json_text) {
  const json doc = json::parse(json_text);
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(doc,
                 {"molecule", "jmax", "m", "initial_state", "target_axis", "tau_ns", "alpha", "dt_ns",
                  "feedback_gain_limit", "max_iterations", "functional_tolerance", "patience", "monotonic_tolerance",
                  "observable_shift", "checkpoint_stride", "lanczos", "guess", "output_dir", "spectrum_max_ghz", "record_stride",
                  "sweep", "parallelism"},
                 "");
  RunConfig c;
  auto& k = c.krotov;
  take(doc, "molecule", c.molecule);
  take(doc, "jmax", c.jmax);
  take(doc, "m", c.m);
  if (doc.contains("initial_state")) k.initial_state = StateLabel::parse(doc.at("initial_state").get<std::string>());
  if (doc.contains("target_axis")) k.target_axis = parse_orientation_axis(doc.at("target_axis").get<std::string>());
  take(doc, "tau_ns", k.mask.tau);
  take(doc, "alpha", k.mask.alpha);
  take(doc, "dt_ns", k.dt);
  take(doc, "feedback_gain_limit", k.feedback_gain_limit);
  take(doc, "max_iterations", k.max_iterations);
  take(doc, "functional_tolerance", k.functional_tolerance);
  take(doc, "patience", k.patience);
  take(doc, "monotonic_tolerance", k.monotonic_tolerance);
  take(doc, "observable_shift", k.observable_shift);
  take(doc, "checkpoint_stride", k.checkpoint_stride);
  if (doc.contains("lanczos")) {
    const auto& l = doc.at("lanczos");
    reject_unknown(l, {"max_krylov_dim", "tolerance", "norm_tolerance", "max_halvings"}, " in lanczos");
    take(l, "max_krylov_dim", k.lanczos.max_krylov_dim);
    take(l, "tolerance", k.lanczos.tolerance);
    take(l, "norm_tolerance", k.lanczos.norm_tolerance);
    take(l, "max_halvings", k.lanczos.max_halvings);
  }
  if (doc.contains("guess")) {
    const auto& g = doc.at("guess");
    reject_unknown(g, {"amplitude_scale", "frequency_ghz", "perturbation", "seed"}, " in guess");
    take(g, "amplitude_scale", k.guess.amplitude_scale);
    take(g, "frequency_ghz", k.guess.frequency_ghz);
    take(g, "perturbation", k.guess.perturbation);
    take(g, "seed", k.guess.seed);
  }
  if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
  take(doc, "spectrum_max_ghz", c.spectrum_max_ghz);
  take(doc, "record_stride", c.record_stride);
  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    reject_unknown(s, {"alpha", "tau_ns", "axis"}, " in sweep");
    take(s, "alpha", c.sweep.alpha);
    take(s, "tau_ns", c.sweep.tau_ns);
    if (s.contains("axis")) {
      for (const auto& a : s.at("axis")) c.sweep.axis.push_back(parse_orientation_axis(a.get<std::string>()));
    }
  }
  take(doc, "parallelism", c.parallelism);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text(path)); }

std::string run_config_json(const RunConfig& c) {
  const auto& k = c.krotov;
  json doc;
  doc["molecule"] = c.molecule;
  doc["jmax"] = c.jmax;
  doc["m"] = c.m;
  doc["initial_state"] = k.initial_state.str();
  doc["target_axis"] = to_string(k.target_axis);
  doc["tau_ns"] = k.mask.tau;
  doc["alpha"] = k.mask.alpha;
  doc["dt_ns"] = k.dt;
  doc["feedback_gain_limit"] = k.feedback_gain_limit;
  doc["max_iterations"] = k.max_iterations;
  doc["functional_tolerance"] = k.functional_tolerance;
  doc["patience"] = k.patience;
  doc["monotonic_tolerance"] = k.monotonic_tolerance;
  doc["observable_shift"] = k.observable_shift;
  doc["checkpoint_stride"] = k.checkpoint_stride;
  doc["lanczos"] = {{"max_krylov_dim", k.lanczos.max_krylov_dim},
                    {"tolerance", k.lanczos.tolerance},
                    {"norm_tolerance", k.lanczos.norm_tolerance},
                    {"max_halvings", k.lanczos.max_halvings}};
  doc["guess"] = {{"amplitude_scale", k.guess.amplitude_scale},
                  {"frequency_ghz", k.guess.frequency_ghz},
                  {"perturbation", k.guess.perturbation},
                  {"seed", k.guess.seed}};
  doc["output_dir"] = c.output_dir.string();
  doc["spectrum_max_ghz"] = c.spectrum_max_ghz;
  doc["record_stride"] = c.record_stride;
  json axes = json::array();
  for (auto a : c.sweep.axis) axes.push_back(to_string(a));
  doc["sweep"] = {{"alpha", c.sweep.alpha}, {"tau_ns", c.sweep.tau_ns}, {"axis", axes}};
  doc["parallelism"] = c.parallelism;
  return doc.dump(2) + "\n";
}

double RunSummary::target_value() const {
  switch (target_axis) {
    case OrientationAxis::z: return cos_z;
    case OrientationAxis::x: return cos_x;
    case OrientationAxis::mu: return cos_mu;
  }
  return 0.0;
}

std::string summary_json(const RunSummary& s) {
  json doc;
  doc["status"] = s.status;
  doc["message"] = s.message;
  doc["target_axis"] = to_string(s.target_axis);
  doc["alpha"] = s.alpha;
  doc["tau_ns"] = s.tau_ns;
  doc["cos_z"] = s.cos_z;
  doc["cos_x"] = s.cos_x;
  doc["cos_mu"] = s.cos_mu;
  doc["J_p"] = s.penalty;
  doc["J_o"] = s.observable;
  doc["peak_field_kvcm"] = s.peak_field_kvcm;
  doc["fluence_kvcm2_ns"] = s.fluence;
  doc["iterations"] = s.iterations;
  doc["rejected"] = s.rejected;
  doc["guess_frequency_ghz"] = s.guess_frequency_ghz;
  doc["wall_time_s"] = s.wall_time_s;
  return doc.dump(2) + "\n";
}

RunSummary parse_summary(const std::string& json_text) {
  const json doc = json::parse(json_text);
  RunSummary s;
  take(doc, "status", s.status);
  take(doc, "message", s.message);
  if (doc.contains("target_axis")) s.target_axis = parse_orientation_axis(doc.at("target_axis").get<std::string>());
  take(doc, "alpha", s.alpha);
  take(doc, "tau_ns", s.tau_ns);
  take(doc, "cos_z", s.cos_z);
  take(doc, "cos_x", s.cos_x);
  take(doc, "cos_mu", s.cos_mu);
  take(doc, "J_p", s.penalty);
  take(doc, "J_o", s.observable);
  take(doc, "peak_field_kvcm", s.peak_field_kvcm);
  take(doc, "fluence_kvcm2_ns", s.fluence);
  take(doc, "iterations", s.iterations);
  take(doc, "rejected", s.rejected);
  take(doc, "guess_frequency_ghz", s.guess_frequency_ghz);
  take(doc, "wall_time_s", s.wall_time_s);
  return s;
}

RunSummary run_single(const RunConfig& config, bool dry_run) {
  config.validate();
  const RotorSystem system(resolve_molecule(config.molecule), config.jmax, config.m);
  return run_single(system, config, dry_run);
}

RunSummary run_single(const RotorSystem& system, const RunConfig& config, bool dry_run) {
  config.validate();
  RunSummary summary;
  summary.target_axis = config.krotov.target_axis;
  summary.alpha = config.krotov.mask.alpha;
  summary.tau_ns = config.krotov.mask.tau;
  if (system.basis().jmax() != config.jmax || system.basis().m() != config.m) {
    throw std::invalid_argument("run_single: operators built for a different basis");
  }
  if (dry_run) {
    // the initial state must exist in this basis
    const auto sol = field_free_eigensolve(system.molecule(), system.basis());
    (void)sol.index_of(config.krotov.initial_state);
    summary.status = "dry_run";
    return summary;
  }

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", run_config_json(config));

  const auto start = std::chrono::steady_clock::now();
  KrotovResult result;
  try {
    result = krotov_optimize(system, config.krotov);
  } catch (const std::exception& e) {
    summary.status = "error";
    summary.message = e.what();
    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(dir / "summary.json", summary_json(summary));
    return summary;
  }
  summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (result.converged) {
    summary.status = "converged";
  } else {
    summary.status = "max_iterations";
  }
  if (!result.rejected.empty()) summary.status = "stalled";
  for (const auto& w : result.warnings) summary.message += (summary.message.empty() ? "" : "; ") + w;
  summary.cos_z = result.cos_z;
  summary.cos_x = result.cos_x;
  summary.cos_mu = result.cos_mu;
  summary.penalty = result.history.back().penalty;
  summary.observable = result.history.back().observable;
  summary.peak_field_kvcm = result.peak_field();
  summary.fluence = result.fluence();
  summary.iterations = result.iterations;
  summary.rejected = static_cast<int>(result.rejected.size());
  summary.guess_frequency_ghz = result.guess_frequency_ghz;

  write_history_csv(dir / "history.csv", result.history);
  write_field_csv(dir / "field.csv", result.field, system.molecule(), config.krotov.mask);
  write_trajectory_csv(dir / "trajectory.csv", thinned(result.trajectory, config.record_stride));
  const auto lines = run_lines(system);
  const double window = default_assignment_window(config.krotov.mask.tau);
  write_field_spectrum(dir, result.field, lines, window, config.spectrum_max_ghz);
  write_orientation_spectra(dir, result.trajectory, lines, window, config.spectrum_max_ghz);
  write_text(dir / "summary.json", summary_json(summary));
  return summary;
}

std::vector<SweepPoint> sweep_points(const RunConfig& config) {
  const auto& k = config.krotov;
  const auto alphas = config.sweep.alpha.empty() ? std::vector<double>{k.mask.alpha} : config.sweep.alpha;
  const auto taus = config.sweep.tau_ns.empty() ? std::vector<double>{k.mask.tau} : config.sweep.tau_ns;
  const auto axes = config.sweep.axis.empty() ? std::vector<OrientationAxis>{k.target_axis} : config.sweep.axis;
  std::vector<SweepPoint> points;
  for (double a : alphas) {
    for (double t : taus) {
      for (auto x : axes) {
        SweepPoint p;
        p.alpha = a;
        p.tau_ns = t;
        p.axis = x;
        p.directory = config.output_dir / point_name(p);
        points.push_back(std::move(p));
      }
    }
  }
  return points;
}

std::vector<SweepPoint> run_sweep(const RunConfig& config, bool dry_run, std::ostream* log) {
  config.validate();
  auto points = sweep_points(config);
  if (log) {
    *log << "sweep: " << points.size() << " points (" << std::max<std::size_t>(1, config.sweep.alpha.size())
         << " alpha x " << std::max<std::size_t>(1, config.sweep.tau_ns.size()) << " tau x "
         << std::max<std::size_t>(1, config.sweep.axis.size()) << " axis)\n";
  }
  // operators are immutable and shared by all workers
  const RotorSystem system(resolve_molecule(config.molecule), config.jmax, config.m);
  const int workers = config.parallelism > 0 ? config.parallelism : omp_get_num_procs();

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& p = points[i];
    RunConfig point = config;
    point.krotov.mask.alpha = p.alpha;
    point.krotov.mask.tau = p.tau_ns;
    point.krotov.target_axis = p.axis;
    point.output_dir = p.directory;
    point.sweep = {};
    try {
      p.summary = run_single(system, point, dry_run);
    } catch (const std::exception& e) {
      p.summary.status = "error";
      p.summary.message = e.what();
      p.summary.target_axis = p.axis;
      p.summary.alpha = p.alpha;
      p.summary.tau_ns = p.tau_ns;
    }
    if (log) {
#pragma omp critical(rotoc_sweep_log)
      *log << "  " << point_name(p) << ": " << p.summary.status << " cos_" << to_string(p.axis) << " = "
           << p.summary.target_value() << " (" << p.summary.iterations << " it, " << p.summary.wall_time_s
           << " s)\n"
           << std::flush;
    }
  }

  if (!dry_run) {
    std::filesystem::create_directories(config.output_dir);
    write_sweep_csv(config.output_dir / "sweep.csv", points);
    write_fig5_dat(config.output_dir / "fig5.dat", points);
  }
  return points;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "alpha,tau_ns,axis,status,cos_z,cos_x,cos_mu,peak_field_kvcm,fluence,iterations,wall_time_s,directory\n"
      << std::setprecision(12);
  for (const auto& p : points) {
    const auto& s = p.summary;
    out << p.alpha << ',' << p.tau_ns << ',' << to_string(p.axis) << ',' << s.status << ',' << s.cos_z << ','
        << s.cos_x << ',' << s.cos_mu << ',' << s.peak_field_kvcm << ',' << s.fluence << ',' << s.iterations << ','
        << s.wall_time_s << ',' << p.directory.filename().string() << '\n';
  }
}

void write_fig5_dat(const std::filesystem::path& path, const std::vector<SweepPoint>& points) {
  std::map<std::pair<std::string, double>, std::vector<const SweepPoint*>> series;
  for (const auto& p : points) series[{to_string(p.axis), p.tau_ns}].push_back(&p);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(12);
  bool first = true;
  for (auto& [key, members] : series) {
    std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->alpha < b->alpha; });
    if (!first) out << "\n\n";
    first = false;
    out << "# axis=" << key.first << " tau_ns=" << key.second << "\n# alpha final_cos\n";
    for (const auto* p : members) {
      if (p->summary.ok()) {
        out << p->alpha << ' ' << p->summary.target_value() << '\n';
      } else {
        out << p->alpha << " nan\n";
      }
    }
  }
}

void write_line_list_csv(const std::filesystem::path& path, const LineList& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "lower,upper,frequency_ghz,axis,strength\n" << std::setprecision(12);
  for (const auto& t : lines.transitions) {
    out << t.lower.str() << ',' << t.upper.str() << ',' << t.frequency_ghz << ',' << to_string(t.axis) << ','
        << t.strength << '\n';
  }
}

RunSummary run_propagate(const RunConfig& config, const std::filesystem::path& field_csv, bool dry_run) {
  config.validate();
  const RotorSystem system(resolve_molecule(config.molecule), config.jmax, config.m);
  const ControlField field = read_field_csv(field_csv, config.krotov.mask.tau);
  const auto sol = field_free_eigensolve(system.molecule(), system.basis());
  const WavePacket psi0 = eigenstate_packet(sol, config.krotov.initial_state, field.t0());
  RunSummary summary;
  summary.target_axis = config.krotov.target_axis;
  summary.alpha = config.krotov.mask.alpha;
  summary.tau_ns = config.krotov.mask.tau;
  if (dry_run) {
    summary.status = "dry_run";
    return summary;
  }
  const auto start = std::chrono::steady_clock::now();
  const Trajectory traj = propagate(system, field, psi0, Direction::forward, {1}, config.krotov.lanczos);
  summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary.status = "propagated";
  summary.cos_z = traj.samples.back().cos_z;
  summary.cos_x = traj.samples.back().cos_x;
  summary.cos_mu = traj.samples.back().cos_mu;
  summary.peak_field_kvcm = peak_of(field);
  summary.fluence = fluence_of(field);
  summary.penalty = penalty_term(field, config.krotov.mask);

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", run_config_json(config));
  write_trajectory_csv(dir / "trajectory.csv", thinned(traj, config.record_stride));
  write_orientation_spectra(dir, traj, transition_line_list(sol, {CosineAxis::z, CosineAxis::x}),
                            default_assignment_window(config.krotov.mask.tau), config.spectrum_max_ghz);
  write_text(dir / "summary.json", summary_json(summary));
  return summary;
}

std::vector<std::filesystem::path> analyze_run(const std::filesystem::path& directory, double max_frequency_ghz) {
  const RunConfig config = load_run_config(directory / "config.json");
  const double fmax = max_frequency_ghz > 0.0 ? max_frequency_ghz : config.spectrum_max_ghz;
  const RotorSystem system(resolve_molecule(config.molecule), config.jmax, config.m);
  const auto lines = run_lines(system);
  const double window = default_assignment_window(config.krotov.mask.tau);

  std::vector<std::filesystem::path> written;
  if (std::filesystem::exists(directory / "field.csv")) {
    const auto field = read_field_csv(directory / "field.csv", config.krotov.mask.tau);
    written = write_field_spectrum(directory, field, lines, window, fmax);
  }
  Trajectory traj = read_trajectory_csv(directory / "trajectory.csv");
  // the recorder appends the final node even when it is off the stride
  auto& s = traj.samples;
  if (s.size() > 2) {
    const double h = s[1].time - s[0].time;
    if (std::abs((s.back().time - s[s.size() - 2].time) - h) > 1e-6 * std::abs(h)) s.pop_back();
  }
  const auto more = write_orientation_spectra(directory, traj, lines, window, fmax);
  written.insert(written.end(), more.begin(), more.end());
  return written;
}

}  // namespace rotoc
