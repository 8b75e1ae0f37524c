#include "rotoc/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "rotoc/kernels.hpp"
#include "rotoc/units.hpp"

namespace rotoc {

void MaskSpec::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("mask: tau must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("mask: alpha must be positive");
}

double mask_value(double t, const MaskSpec& spec) {
  return std::exp(-4.0 * std::numbers::ln2 * t * t / (spec.tau * spec.tau));
}

std::pair<double, double> time_window(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("time_window: tau must be positive");
  const double t = std::sqrt(std::log(5.0e7) / std::numbers::ln2) * tau / 2.0;
  return {-t, t};
}

std::size_t window_steps(double tau, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("window_steps: dt must be positive");
  const auto [t0, t1] = time_window(tau);
  return static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
}

double field_scale_kvcm(const MoleculeSpec& mol, double alpha) {
  return units::field_au_to_kvcm(units::debye_to_au(mol.mu()) / alpha);
}

double penalty_term(const ControlField& field, const MaskSpec& spec) {
  const double dt_au = units::ns_to_au(field.dt());
  double sum = 0.0;
  for (std::size_t k = 0; k < field.steps(); ++k) {
    const double e = units::field_kvcm_to_au(field.sample(k));
    sum += e * e / mask_value(field.midpoint(k), spec);
  }
  return -spec.alpha * sum * dt_au;
}

FunctionalTerms functional_terms(const RotorSystem& system, const ControlField& field,
                                 const WavePacket& psi_final, const MaskSpec& spec,
                                 OrientationAxis axis, double shift) {
  const auto& v = psi_final.coefficients;
  const std::span<const cplx> s{v.data(), static_cast<std::size_t>(v.size())};
  FunctionalTerms terms;
  terms.penalty = penalty_term(field, spec);
  terms.observable = kernels::csr_sandwich(system.cosine(axis).csr(), s, s).real() + shift * v.squaredNorm();
  return terms;
}

double field_update(const RotorSystem& system, const Eigen::VectorXcd& chi, const Eigen::VectorXcd& psi,
                    double t, const MaskSpec& spec) {
  const std::span<const cplx> c{chi.data(), static_cast<std::size_t>(chi.size())};
  const std::span<const cplx> p{psi.data(), static_cast<std::size_t>(psi.size())};
  const double overlap_au = units::debye_to_au(kernels::csr_sandwich(system.dipole().csr(), c, p).imag());
  return units::field_au_to_kvcm(-mask_value(t, spec) / spec.alpha * overlap_au);
}

double KrotovResult::peak_field() const {
  double peak = 0.0;
  for (double e : field.samples()) peak = std::max(peak, std::abs(e));
  return peak;
}

double KrotovResult::fluence() const {
  double sum = 0.0;
  for (double e : field.samples()) sum += e * e;
  return sum * field.dt();
}

namespace {

double guess_frequency(const RotorSystem& system, const KrotovConfig& config) {
  if (config.guess.frequency_ghz > 0.0) return config.guess.frequency_ghz;
  const auto sol = field_free_eigensolve(system.molecule(), system.basis());
  const CosineAxis axis = config.target_axis == OrientationAxis::x ? CosineAxis::x : CosineAxis::z;
  const auto lines = transition_line_list(sol, {axis});
  for (const auto& t : lines.transitions) {
    if (t.lower == config.initial_state || t.upper == config.initial_state) return t.frequency_ghz;
  }
  throw std::runtime_error("no " + to_string(axis) + "-allowed transition from " +
                           config.initial_state.str() + " to seed the guess field");
}

}  // namespace

double feedback_dt(const MoleculeSpec& mol, const KrotovConfig& config) {
  if (!(config.dt > 0.0)) throw std::invalid_argument("krotov: dt must be positive");
  if (!(config.feedback_gain_limit > 0.0)) return config.dt;
  const double mu = units::debye_to_au(mol.mu());
  const double gain = mu * mu * units::ns_to_au(config.dt) / (2.0 * config.mask.alpha);
  return config.dt / std::ceil(std::max(1.0, gain / config.feedback_gain_limit));
}

ControlField initial_guess_field(const RotorSystem& system, const KrotovConfig& config) {
  config.mask.validate();
  const auto [t0, t1] = time_window(config.mask.tau);
  const std::size_t steps = window_steps(config.mask.tau, feedback_dt(system.molecule(), config));
  const double amplitude = config.guess.amplitude_scale * field_scale_kvcm(system.molecule(), config.mask.alpha);
  const double nu = guess_frequency(system, config);
  const MaskSpec mask = config.mask;
  ControlField field = ControlField::sampled(
      t0, t1, steps,
      [&](double t) { return mask_value(t, mask) * amplitude * std::sin(2.0 * std::numbers::pi * nu * t); },
      mask.tau);
  if (config.guess.perturbation != 0.0) {
    std::mt19937_64 rng(config.guess.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& e : field.mutable_samples()) e *= 1.0 + config.guess.perturbation * u(rng);
  }
  return field;
}

namespace {

// Costate storage for one backward sweep. Either every node is kept or only
// every `stride`-th node, with segments rebuilt on demand during the forward
// sweep by re-running the same backward steps.
class CostateStore {
 public:
  CostateStore(LanczosPropagator& prop, std::size_t n, std::size_t nodes, std::size_t stride)
      : prop_(prop), stride_(stride == 0 ? 1 : stride), full_(stride == 0) {
    const auto rows = static_cast<Eigen::Index>(n);
    if (full_) {
      store_.resize(rows, static_cast<Eigen::Index>(nodes));
    } else {
      store_.resize(rows, static_cast<Eigen::Index>((nodes - 1) / stride_ + 2));
      segment_.resize(rows, static_cast<Eigen::Index>(stride_ + 1));
    }
    last_ = nodes - 1;
  }

  void fill(Eigen::VectorXcd chi, const ControlField& field) {
    field_ = &field;
    put(last_, chi);
    for (std::size_t k = last_; k-- > 0;) {
      prop_.step_back(chi, field.sample(k), field.dt());
      put(k, chi);
    }
    segment_start_ = static_cast<std::size_t>(-1);
  }

  // chi at node k; nodes must be requested in increasing order in checkpoint mode.
  Eigen::Ref<const Eigen::VectorXcd> at(std::size_t k) {
    if (full_) return store_.col(static_cast<Eigen::Index>(k));
    const std::size_t start = (k / stride_) * stride_;
    if (start != segment_start_) rebuild(start);
    return segment_.col(static_cast<Eigen::Index>(k - start));
  }

 private:
  void put(std::size_t k, const Eigen::VectorXcd& chi) {
    if (full_) {
      store_.col(static_cast<Eigen::Index>(k)) = chi;
    } else if (k % stride_ == 0) {
      store_.col(static_cast<Eigen::Index>(k / stride_)) = chi;
    } else if (k == last_) {
      store_.col(store_.cols() - 1) = chi;
    }
  }

  void rebuild(std::size_t start) {
    const std::size_t end = std::min(start + stride_, last_);
    Eigen::VectorXcd chi = end == last_ && end % stride_ != 0
                               ? Eigen::VectorXcd(store_.col(store_.cols() - 1))
                               : Eigen::VectorXcd(store_.col(static_cast<Eigen::Index>(end / stride_)));
    segment_.col(static_cast<Eigen::Index>(end - start)) = chi;
    for (std::size_t k = end; k-- > start;) {
      prop_.step_back(chi, field_->sample(k), field_->dt());
      segment_.col(static_cast<Eigen::Index>(k - start)) = chi;
    }
    segment_start_ = start;
  }

  LanczosPropagator& prop_;
  std::size_t stride_;
  bool full_;
  std::size_t last_ = 0;
  Eigen::MatrixXcd store_;
  Eigen::MatrixXcd segment_;
  std::size_t segment_start_ = static_cast<std::size_t>(-1);
  const ControlField* field_ = nullptr;
};

}  // namespace

KrotovResult krotov_optimize(const RotorSystem& system, const KrotovConfig& config) {
  config.mask.validate();
  if (config.max_iterations < 0) throw std::invalid_argument("krotov: negative iteration budget");
  const auto& mask = config.mask;
  const auto sol = field_free_eigensolve(system.molecule(), system.basis());

  KrotovResult result;
  ControlField field = config.initial_field ? *config.initial_field : initial_guess_field(system, config);
  if (!config.initial_field) result.guess_frequency_ghz = guess_frequency(system, config);
  const WavePacket psi0 = eigenstate_packet(sol, config.initial_state, field.t0());

  LanczosPropagator prop(system, config.lanczos);
  const std::size_t steps = field.steps();
  const auto& observable = system.cosine(config.target_axis);

  auto forward = [&](const ControlField& f) {
    Eigen::VectorXcd psi = psi0.coefficients;
    for (std::size_t k = 0; k < steps; ++k) prop.step(psi, f.sample(k), f.dt());
    return psi;
  };
  auto apply_observable = [&](const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd out(psi.size());
    const auto& csr = observable.csr();
    for (std::size_t i = 0; i < csr.rows; ++i) {
      cplx s = config.observable_shift * psi(static_cast<Eigen::Index>(i));
      for (std::size_t p = csr.row_ptr[i]; p < csr.row_ptr[i + 1]; ++p) {
        s += csr.values[p] * psi(static_cast<Eigen::Index>(csr.col_idx[p]));
      }
      out(static_cast<Eigen::Index>(i)) = s;
    }
    return out;
  };
  auto evaluate = [&](int iteration, const ControlField& f, const Eigen::VectorXcd& psi_t) {
    const auto terms = functional_terms(system, f, {psi_t, f.t_end()}, mask, config.target_axis,
                                        config.observable_shift);
    return IterationRecord{iteration, 0.0, terms.penalty, terms.observable};
  };

  Eigen::VectorXcd psi_t = forward(field);
  result.history.push_back(evaluate(0, field, psi_t));
  if (config.on_iteration) config.on_iteration(0, result.history.back().penalty, result.history.back().observable);

  CostateStore costate(prop, system.size(), steps + 1, config.checkpoint_stride);
  int quiet = 0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    costate.fill(apply_observable(psi_t), field);

    ControlField updated(field.t0(), field.dt(), std::vector<double>(steps), field.tau());
    auto& samples = updated.mutable_samples();
    Eigen::VectorXcd psi = psi0.coefficients;
    // Both states are advanced half a step under the current field so the
    // update sees them at the midpoint where the new sample applies; at a
    // fixed point the prediction is exact.
    Eigen::VectorXcd chi_mid, psi_mid;
    for (std::size_t k = 0; k < steps; ++k) {
      chi_mid = costate.at(k);
      prop.step(chi_mid, field.sample(k), 0.5 * field.dt());
      psi_mid = psi;
      prop.step(psi_mid, field.sample(k), 0.5 * field.dt());
      samples[k] = field_update(system, chi_mid, psi_mid, field.midpoint(k), mask);
      prop.step(psi, samples[k], field.dt());
    }

    const IterationRecord record = evaluate(it, updated, psi);
    const double previous = result.history.back().total();
    const double gain = record.total() - previous;
    if (config.on_iteration) config.on_iteration(it, record.penalty, record.observable);
    if (gain < -config.monotonic_tolerance) {
      result.rejected.push_back(record);
      std::ostringstream msg;
      msg << "iteration " << it << " decreased J_p + J_o by " << -gain << "; rolled back";
      result.warnings.push_back(msg.str());
      break;
    }
    field = std::move(updated);
    psi_t = std::move(psi);
    result.history.push_back(record);
    result.iterations = it;

    quiet = std::abs(gain) < config.functional_tolerance ? quiet + 1 : 0;
    if (quiet >= config.patience) {
      result.converged = true;
      break;
    }
  }

  result.field = field;
  result.trajectory = propagate(system, field, psi0, Direction::forward, {1}, config.lanczos);
  const auto& last = result.trajectory.samples.back();
  result.cos_z = last.cos_z;
  result.cos_x = last.cos_x;
  result.cos_mu = last.cos_mu;
  return result;
}

KrotovResult krotov_optimize(const MoleculeSpec& mol, int jmax, const KrotovConfig& config) {
  const RotorSystem system(mol, jmax, config.initial_state.m);
  return krotov_optimize(system, config);
}

void write_field_csv(const std::filesystem::path& path, const ControlField& field,
                     const MoleculeSpec& mol, const MaskSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const double scale = field_scale_kvcm(mol, spec.alpha);
  out << "t_mid_ns,field_kvcm,envelope_kvcm\n" << std::setprecision(15);
  for (std::size_t k = 0; k < field.steps(); ++k) {
    const double t = field.midpoint(k);
    out << t << ',' << field.sample(k) << ',' << mask_value(t, spec) * scale << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,J_S,J_p,J_o,total\n" << std::setprecision(15);
  for (const auto& r : history) {
    out << r.iteration << ',' << r.schrodinger << ',' << r.penalty << ',' << r.observable << ','
        << r.total() << '\n';
  }
}

}  // namespace rotoc
