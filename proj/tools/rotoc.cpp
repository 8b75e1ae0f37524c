// Command-line front end: spectrum, propagate, optimize, sweep, analyze.

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rotoc/runner.hpp"

namespace {

using namespace rotoc;

// Flags that mirror config keys. Only flags given on the command line
// override the config file.
struct Overrides {
  std::optional<std::string> molecule;
  std::optional<int> jmax;
  std::optional<int> m;
  std::optional<std::string> state;
  std::optional<std::string> axis;
  std::optional<double> tau;
  std::optional<double> alpha;
  std::optional<double> dt;
  std::optional<double> feedback_gain;
  std::optional<int> max_iterations;
  std::optional<double> tolerance;
  std::optional<int> patience;
  std::optional<int> max_krylov;
  std::optional<std::size_t> checkpoint_stride;
  std::optional<double> guess_amplitude;
  std::optional<double> guess_frequency;
  std::optional<double> guess_perturbation;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<double> spectrum_max;
  std::optional<std::size_t> record_stride;
  std::optional<int> parallelism;
  std::vector<double> sweep_alpha;
  std::vector<double> sweep_tau;
  std::vector<std::string> sweep_axis;
  std::string config_file;
  bool dry_run = false;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--molecule", o.molecule, "\"cpc\" or a molecule JSON file");
  cmd->add_option("--jmax", o.jmax, "basis truncation");
  cmd->add_option("--m", o.m, "magnetic quantum number");
  cmd->add_option("--state", o.state, "initial state label, e.g. 0_{0,0}0");
  cmd->add_option("--axis", o.axis, "target axis: z, x or mu");
  cmd->add_option("--tau", o.tau, "mask FWHM (ns)");
  cmd->add_option("--alpha", o.alpha, "penalty factor");
  cmd->add_option("--dt", o.dt, "time step (ns)");
  cmd->add_option("--feedback-gain", o.feedback_gain, "largest feedback gain per step before dt is divided (0: off)");
  cmd->add_option("--max-iterations", o.max_iterations);
  cmd->add_option("--tolerance", o.tolerance, "functional change counted as converged");
  cmd->add_option("--patience", o.patience, "consecutive converged iterations before stopping");
  cmd->add_option("--max-krylov", o.max_krylov, "largest Krylov order before step halving");
  cmd->add_option("--checkpoint-stride", o.checkpoint_stride, "0 keeps the full costate");
  cmd->add_option("--guess-amplitude", o.guess_amplitude, "seed amplitude in units of mu/alpha");
  cmd->add_option("--guess-frequency", o.guess_frequency, "seed frequency (GHz), 0 = lowest line");
  cmd->add_option("--guess-perturbation", o.guess_perturbation, "relative noise on the seed");
  cmd->add_option("--seed", o.seed, "noise seed");
  cmd->add_option("-o,--output", o.output, "result directory");
  cmd->add_option("--spectrum-max", o.spectrum_max, "upper edge of written spectra (GHz)");
  cmd->add_option("--record-stride", o.record_stride, "trajectory.csv keeps every n-th step");
  cmd->add_option("-j,--parallelism", o.parallelism, "sweep workers, 0 = all cores");
  cmd->add_flag("--dry-run", o.dry_run, "validate the configuration and exit");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_file.empty() ? RunConfig{} : load_run_config(o.config_file);
  auto& k = c.krotov;
  if (o.molecule) c.molecule = *o.molecule;
  if (o.jmax) c.jmax = *o.jmax;
  if (o.m) {
    c.m = *o.m;
    if (!o.state) k.initial_state.m = *o.m;
  }
  if (o.state) k.initial_state = StateLabel::parse(*o.state);
  if (o.axis) k.target_axis = parse_orientation_axis(*o.axis);
  if (o.tau) k.mask.tau = *o.tau;
  if (o.alpha) k.mask.alpha = *o.alpha;
  if (o.dt) k.dt = *o.dt;
  if (o.feedback_gain) k.feedback_gain_limit = *o.feedback_gain;
  if (o.max_iterations) k.max_iterations = *o.max_iterations;
  if (o.tolerance) k.functional_tolerance = *o.tolerance;
  if (o.patience) k.patience = *o.patience;
  if (o.max_krylov) k.lanczos.max_krylov_dim = *o.max_krylov;
  if (o.checkpoint_stride) k.checkpoint_stride = *o.checkpoint_stride;
  if (o.guess_amplitude) k.guess.amplitude_scale = *o.guess_amplitude;
  if (o.guess_frequency) k.guess.frequency_ghz = *o.guess_frequency;
  if (o.guess_perturbation) k.guess.perturbation = *o.guess_perturbation;
  if (o.seed) k.guess.seed = *o.seed;
  if (o.output) c.output_dir = *o.output;
  if (o.spectrum_max) c.spectrum_max_ghz = *o.spectrum_max;
  if (o.record_stride) c.record_stride = *o.record_stride;
  if (o.parallelism) c.parallelism = *o.parallelism;
  if (!o.sweep_alpha.empty()) c.sweep.alpha = o.sweep_alpha;
  if (!o.sweep_tau.empty()) c.sweep.tau_ns = o.sweep_tau;
  if (!o.sweep_axis.empty()) {
    c.sweep.axis.clear();
    for (const auto& a : o.sweep_axis) c.sweep.axis.push_back(parse_orientation_axis(a));
  }
  c.validate();
  return c;
}

void print_summary(const RunSummary& s) {
  std::cout << std::setprecision(6) << "status      " << s.status << '\n';
  if (!s.message.empty()) std::cout << "message     " << s.message << '\n';
  std::cout << "cos_z       " << s.cos_z << '\n'
            << "cos_x       " << s.cos_x << '\n'
            << "cos_mu      " << s.cos_mu << '\n'
            << "peak field  " << s.peak_field_kvcm << " kV/cm\n"
            << "iterations  " << s.iterations << '\n'
            << "wall time   " << s.wall_time_s << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum optimal control of asymmetric-top orientation"};
  app.require_subcommand(1);

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "field-free transition line list");
  std::string sp_molecule = "cpc";
  int sp_jmax = 9;
  int sp_m = 0;
  double sp_max = 0.0;
  double sp_threshold = kLineStrengthThreshold;
  std::string sp_out;
  spectrum->add_option("--molecule", sp_molecule, "\"cpc\" or a molecule JSON file");
  spectrum->add_option("--jmax", sp_jmax, "basis truncation")->capture_default_str();
  spectrum->add_option("--m", sp_m)->capture_default_str();
  spectrum->add_option("--max-ghz", sp_max, "drop lines above this frequency (0 = keep all)");
  spectrum->add_option("--threshold", sp_threshold, "smallest |<f|cos|i>| listed")->capture_default_str();
  spectrum->add_option("-o,--output", sp_out, "CSV file (default: table on stdout)");

  // propagate
  Overrides prop_o;
  std::string field_file;
  auto* propagate_cmd = app.add_subcommand("propagate", "propagate the initial state under a stored field");
  add_run_options(propagate_cmd, prop_o);
  propagate_cmd->add_option("-f,--field", field_file, "field CSV (t_mid_ns or time_ns, field_kvcm)")
      ->required()
      ->check(CLI::ExistingFile);

  // optimize
  Overrides opt_o;
  auto* optimize = app.add_subcommand("optimize", "single Krotov optimization");
  add_run_options(optimize, opt_o);

  // sweep
  Overrides sw_o;
  auto* sweep = app.add_subcommand("sweep", "optimizations over alpha x tau x axis");
  add_run_options(sweep, sw_o);
  sweep->add_option("--sweep-alpha", sw_o.sweep_alpha, "alpha values")->delimiter(',');
  sweep->add_option("--sweep-tau", sw_o.sweep_tau, "tau values (ns)")->delimiter(',');
  sweep->add_option("--sweep-axis", sw_o.sweep_axis, "axes (z, x, mu)")->delimiter(',');

  // analyze
  std::vector<std::string> an_dirs;
  double an_max = 0.0;
  auto* analyze = app.add_subcommand("analyze", "recompute spectra of stored runs");
  analyze->add_option("dirs", an_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--spectrum-max", an_max, "upper edge (GHz), 0 = value from config.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spectrum) {
      const RotorSystem system(resolve_molecule(sp_molecule), sp_jmax, sp_m);
      const auto sol = field_free_eigensolve(system.molecule(), system.basis());
      auto lines = transition_line_list(sol, {CosineAxis::z, CosineAxis::x}, sp_threshold);
      if (sp_max > 0.0) {
        std::erase_if(lines.transitions, [&](const Transition& t) { return t.frequency_ghz > sp_max; });
      }
      if (!sp_out.empty()) {
        write_line_list_csv(sp_out, lines);
      } else {
        std::cout << std::left << std::setw(12) << "lower" << std::setw(12) << "upper" << std::setw(14)
                  << "freq/GHz" << std::setw(6) << "axis" << "strength\n";
        for (const auto& t : lines.transitions) {
          std::cout << std::setw(12) << t.lower.str() << std::setw(12) << t.upper.str() << std::setw(14)
                    << std::fixed << std::setprecision(5) << t.frequency_ghz << std::setw(6) << to_string(t.axis)
                    << std::setprecision(4) << t.strength << '\n';
        }
      }
    } else if (*propagate_cmd) {
      const RunConfig config = resolve(prop_o);
      const auto s = run_propagate(config, field_file, prop_o.dry_run);
      print_summary(s);
    } else if (*optimize) {
      const RunConfig config = resolve(opt_o);
      if (opt_o.dry_run) {
        std::cout << run_config_json(config);
      }
      const auto s = run_single(config, opt_o.dry_run);
      print_summary(s);
      if (s.status == "error") return 2;
    } else if (*sweep) {
      const RunConfig config = resolve(sw_o);
      const auto points = run_sweep(config, sw_o.dry_run, &std::cerr);
      std::size_t failed = 0;
      for (const auto& p : points) failed += p.summary.status == "error" ? 1 : 0;
      if (!sw_o.dry_run) std::cout << "wrote " << (config.output_dir / "sweep.csv").string() << '\n';
      if (failed) {
        std::cerr << failed << " of " << points.size() << " points failed\n";
        return 2;
      }
    } else if (*analyze) {
      for (const auto& d : an_dirs) {
        for (const auto& f : analyze_run(d, an_max)) std::cout << f.string() << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
