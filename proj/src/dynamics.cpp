#include "rotoc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "rotoc/kernels.hpp"
#include "rotoc/units.hpp"

namespace rotoc {

WavePacket eigenstate_packet(const FieldFreeSolution& sol, const StateLabel& label, double time) {
  const auto idx = static_cast<Eigen::Index>(sol.index_of(label));
  return {sol.vectors.col(idx).cast<cplx>(), time};
}

ControlField::ControlField(double t0, double dt, std::vector<double> samples, double tau)
    : t0_(t0), dt_(dt), samples_(std::move(samples)), tau_(tau) {
  if (!(dt > 0.0)) throw std::invalid_argument("ControlField: dt must be positive");
}

ControlField ControlField::from_nodes(std::span<const double> times, std::span<const double> values,
                                      double tau) {
  if (times.size() != values.size()) throw std::invalid_argument("ControlField: size mismatch");
  if (times.size() < 2) throw std::invalid_argument("ControlField: need at least two nodes");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * dt) {
      throw std::invalid_argument("ControlField: non-uniform time grid at node " + std::to_string(i));
    }
  }
  std::vector<double> mid(times.size() - 1);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) mid[k] = 0.5 * (values[k] + values[k + 1]);
  return ControlField(times.front(), dt, std::move(mid), tau);
}

ControlField ControlField::sampled(double t0, double t1, std::size_t steps,
                                   const std::function<double(double)>& f, double tau) {
  if (steps == 0) return ControlField(t0, 1.0, {}, tau);
  const double dt = (t1 - t0) / static_cast<double>(steps);
  std::vector<double> s(steps);
  for (std::size_t k = 0; k < steps; ++k) s[k] = f(t0 + dt * (static_cast<double>(k) + 0.5));
  return ControlField(t0, dt, std::move(s), tau);
}

double ControlField::node_value(std::size_t k) const {
  if (samples_.empty()) return 0.0;
  if (k == 0) return samples_.front();
  if (k >= samples_.size()) return samples_.back();
  return 0.5 * (samples_[k - 1] + samples_[k]);
}

LanczosPropagator::LanczosPropagator(const RotorSystem& system, LanczosOptions options)
    : system_(&system), options_(options) {
  if (options_.max_krylov_dim < 2) throw std::invalid_argument("Lanczos: Krylov dimension must be >= 2");
  const auto n = static_cast<Eigen::Index>(system.size());
  const int cap = options_.max_krylov_dim;
  basis_.resize(n, cap + 1);
  work_.resize(n);
  alpha_.resize(cap);
  beta_.resize(cap);
  overlaps_.resize(cap + 1);
  rotated_.resize(cap);
  coeff_.resize(cap);
}

void LanczosPropagator::apply(double field, const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
  kernels::csr_apply_pair(system_->rotational().csr(), system_->coupling().csr(), field,
                          {x.data(), static_cast<std::size_t>(x.size())},
                          {y.data(), static_cast<std::size_t>(y.size())});
}

void LanczosPropagator::step(Eigen::VectorXcd& psi, double field_kvcm, double dt) {
  const double norm0 = psi.norm();
  if (norm0 == 0.0) return;
  advance(psi, field_kvcm, dt, 0);
  const double drift = std::abs(psi.norm() - norm0) / norm0;
  if (drift > options_.norm_tolerance) {
    throw StepError("Lanczos step: norm drift " + std::to_string(drift) + " exceeds tolerance; reduce dt");
  }
  psi *= norm0 / psi.norm();
}

void LanczosPropagator::step_back(Eigen::VectorXcd& psi, double field_kvcm, double dt) {
  psi = psi.conjugate();
  step(psi, field_kvcm, dt);
  psi = psi.conjugate();
}

void LanczosPropagator::advance(Eigen::VectorXcd& psi, double field, double dt, int depth) {
  const double beta0 = psi.norm();
  const Eigen::Index n = psi.size();
  const int cap = static_cast<int>(std::min<Eigen::Index>(options_.max_krylov_dim, n));
  const double phase = units::kPhase * dt;

  // alpha_/beta_: tridiagonal projection; beta_[j] couples q_j and q_{j+1}
  basis_.col(0) = psi / beta0;
  int m = 0;
  double error = 0.0;
  // leading Taylor term of the error estimate, |phase|^m prod(beta) / (m-1)!
  double predicted = 1.0;
  while (true) {
    apply(field, basis_.col(m), work_);
    const double a = basis_.col(m).dot(work_).real();
    alpha_(m) = a;
    work_ -= a * basis_.col(m);
    if (m > 0) work_ -= beta_(m - 1) * basis_.col(m - 1);
    // one pass of full reorthogonalization
    overlaps_.head(m + 1).noalias() = basis_.leftCols(m + 1).adjoint() * work_;
    work_.noalias() -= basis_.leftCols(m + 1) * overlaps_.head(m + 1);
    const double b = work_.norm();
    beta_(m) = b;
    ++m;

    const double scale = std::abs(a) + (m > 1 ? beta_(m - 2) : 0.0) + 1.0;
    // invariant subspace reached: the Krylov result is exact
    const bool breakdown = b <= 1e-14 * scale || m == n;
    predicted *= std::abs(phase) * b / std::max(m - 1, 1);
    if (!breakdown && m < cap && predicted > 1e2 * options_.tolerance) {
      basis_.col(m) = work_ / b;
      continue;
    }

    tri_.computeFromTridiagonal(alpha_.head(m), beta_.head(m - 1), Eigen::ComputeEigenvectors);
    const Eigen::MatrixXd& s = tri_.eigenvectors();
    for (int i = 0; i < m; ++i) rotated_(i) = s(0, i) * std::polar(1.0, -phase * tri_.eigenvalues()(i));
    coeff_.head(m).noalias() = s.cast<cplx>() * rotated_.head(m);

    // Saad's a-posteriori estimate |phase| * beta_m * |e_m^T exp(-i phase T) e_1|
    error = breakdown ? 0.0 : std::abs(phase) * b * std::abs(coeff_(m - 1));
    if (error <= options_.tolerance) break;
    if (m >= cap) break;
    basis_.col(m) = work_ / b;
  }

  if (error > options_.tolerance) {
    if (depth >= options_.max_halvings) {
      throw StepError("Lanczos step: Krylov error " + std::to_string(error) +
                      " above tolerance after step halving");
    }
    substeps_ += 2;
    advance(psi, field, 0.5 * dt, depth + 1);
    advance(psi, field, 0.5 * dt, depth + 1);
    return;
  }
  largest_dim_ = std::max(largest_dim_, m);
  krylov_total_ += static_cast<std::size_t>(m);
  ++krylov_steps_;
  psi.noalias() = beta0 * (basis_.leftCols(m) * coeff_.head(m));
}

WavePacket lanczos_step(const RotorSystem& system, double field_kvcm, const WavePacket& psi,
                        double dt, int krylov_dim) {
  if (!(dt > 0.0)) throw std::invalid_argument("lanczos_step: dt must be positive");
  LanczosOptions options;
  options.max_krylov_dim = krylov_dim;
  LanczosPropagator prop(system, options);
  WavePacket out = psi;
  prop.step(out.coefficients, field_kvcm, dt);
  out.time += dt;
  return out;
}

TrajectorySample observe(const RotorSystem& system, const Eigen::VectorXcd& psi, double time,
                         double field) {
  const std::span<const cplx> v{psi.data(), static_cast<std::size_t>(psi.size())};
  const double n2 = psi.squaredNorm();
  TrajectorySample s;
  s.time = time;
  s.norm = std::sqrt(n2);
  s.field = field;
  if (n2 == 0.0) return s;
  s.cos_z = kernels::csr_sandwich(system.cos_z().csr(), v, v).real() / n2;
  s.cos_x = kernels::csr_sandwich(system.cos_x().csr(), v, v).real() / n2;
  s.cos_mu = kernels::csr_sandwich(system.cos_mu().csr(), v, v).real() / n2;
  return s;
}

namespace {

template <typename Stepper>
Trajectory run_grid(const RotorSystem& system, const ControlField& field, const WavePacket& psi0,
                    Direction direction, RecorderOptions recorder, Stepper&& stepper) {
  if (static_cast<std::size_t>(psi0.coefficients.size()) != system.size()) {
    throw std::invalid_argument("propagate: packet does not match basis");
  }
  const std::size_t n = field.steps();
  const std::size_t stride = std::max<std::size_t>(recorder.stride, 1);
  Trajectory traj;
  Eigen::VectorXcd psi = psi0.coefficients;
  auto record = [&](std::size_t node) {
    traj.samples.push_back(observe(system, psi, field.node_time(node), field.node_value(node)));
  };
  if (direction == Direction::forward) {
    record(0);
    for (std::size_t k = 0; k < n; ++k) {
      stepper(psi, field.sample(k), field.dt(), direction);
      if ((k + 1) % stride == 0 || k + 1 == n) record(k + 1);
    }
    traj.final_state = {psi, field.t_end()};
  } else {
    record(n);
    for (std::size_t k = n; k-- > 0;) {
      stepper(psi, field.sample(k), field.dt(), direction);
      if ((n - k) % stride == 0 || k == 0) record(k);
    }
    traj.final_state = {psi, field.t0()};
  }
  return traj;
}

}  // namespace

Trajectory propagate(const RotorSystem& system, const ControlField& field, const WavePacket& psi0,
                     Direction direction, RecorderOptions recorder, LanczosOptions options) {
  LanczosPropagator prop(system, options);
  return run_grid(system, field, psi0, direction, recorder,
                  [&prop](Eigen::VectorXcd& psi, double e, double dt, Direction d) {
                    if (d == Direction::forward) {
                      prop.step(psi, e, dt);
                    } else {
                      prop.step_back(psi, e, dt);
                    }
                  });
}

Trajectory dense_reference_propagate(const RotorSystem& system, const ControlField& field,
                                     const WavePacket& psi0, Direction direction,
                                     RecorderOptions recorder) {
  if (system.size() > kDenseReferenceLimit) {
    throw std::length_error("dense_reference_propagate: basis of " + std::to_string(system.size()) +
                            " states exceeds the dense limit of " + std::to_string(kDenseReferenceLimit));
  }
  const Eigen::MatrixXd h0 = system.rotational().dense();
  const Eigen::MatrixXd v = system.coupling().dense();
  double cached_field = std::nan("");
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  return run_grid(system, field, psi0, direction, recorder,
                  [&](Eigen::VectorXcd& psi, double e, double dt, Direction d) {
                    if (!(e == cached_field)) {
                      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h0 + e * v);
                      vectors = solver.eigenvectors();
                      values = solver.eigenvalues();
                      cached_field = e;
                    }
                    const double sign = d == Direction::forward ? -1.0 : 1.0;
                    Eigen::VectorXcd c = vectors.transpose().cast<cplx>() * psi;
                    for (Eigen::Index i = 0; i < c.size(); ++i) {
                      c(i) *= std::polar(1.0, sign * units::kPhase * values(i) * dt);
                    }
                    psi = vectors.cast<cplx>() * c;
                  });
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "time_ns,cos_z,cos_x,cos_mu,norm,field_kvcm\n";
  out << std::setprecision(12);
  for (const auto& s : trajectory.samples) {
    out << s.time << ',' << s.cos_z << ',' << s.cos_x << ',' << s.cos_mu << ',' << s.norm << ','
        << s.field << '\n';
  }
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        row.push_back(std::nan(""));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, header);
  Trajectory traj;
  for (const auto& r : rows) {
    if (r.size() < 6) throw std::runtime_error(path.string() + ": expected 6 columns");
    traj.samples.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
  }
  return traj;
}

ControlField read_field_csv(const std::filesystem::path& path, double tau) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, header);
  if (header.size() < 2 || rows.size() < 2) throw std::runtime_error(path.string() + ": not a field file");
  std::vector<double> t;
  std::vector<double> e;
  for (const auto& r : rows) {
    t.push_back(r.at(0));
    e.push_back(r.at(1));
  }
  if (header[0] == "t_mid_ns") {
    // step midpoints: use the samples as they are
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt) {
        throw std::invalid_argument(path.string() + ": non-uniform time grid");
      }
    }
    return ControlField(t.front() - 0.5 * dt, dt, std::move(e), tau);
  }
  return ControlField::from_nodes(t, e, tau);
}

}  // namespace rotoc
