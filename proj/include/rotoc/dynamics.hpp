#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rotoc/rotor.hpp"

namespace rotoc {

/// Coefficients over a RotorBasis at time `time` (ns).
struct WavePacket {
  Eigen::VectorXcd coefficients;
  double time = 0.0;

  double norm() const { return coefficients.norm(); }
};

/// Field-free eigenstate `label` of `sol` as a packet.
WavePacket eigenstate_packet(const FieldFreeSolution& sol, const StateLabel& label, double time);

/// Field on a uniform grid t0, t0+dt, ..., t0+N*dt. The field is held
/// constant inside each of the N steps; sample k is its value at the step
/// midpoint t0 + (k + 1/2) dt.
class ControlField {
 public:
  ControlField() = default;
  ControlField(double t0, double dt, std::vector<double> samples, double tau = 0.0);

  /// Samples taken at grid nodes; step values are linearly interpolated to the
  /// midpoints. Throws std::invalid_argument on a non-uniform grid.
  static ControlField from_nodes(std::span<const double> times, std::span<const double> values,
                                 double tau = 0.0);
  /// N steps covering [t0, t1] exactly, each valued f(midpoint).
  static ControlField sampled(double t0, double t1, std::size_t steps,
                              const std::function<double(double)>& f, double tau = 0.0);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double t_end() const { return t0_ + dt_ * static_cast<double>(samples_.size()); }
  double tau() const { return tau_; }
  std::size_t steps() const { return samples_.size(); }
  double node_time(std::size_t k) const { return t0_ + dt_ * static_cast<double>(k); }
  double midpoint(std::size_t k) const { return t0_ + dt_ * (static_cast<double>(k) + 0.5); }
  double sample(std::size_t k) const { return samples_[k]; }
  /// Average of the two adjacent steps (one-sided at the ends).
  double node_value(std::size_t k) const;

  std::span<const double> samples() const { return samples_; }
  std::vector<double>& mutable_samples() { return samples_; }

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  std::vector<double> samples_;
  double tau_ = 0.0;
};

class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Krylov order is chosen per step: vectors are added until the error
/// estimate drops below `tolerance`, up to max_krylov_dim; beyond that the
/// step is halved.
struct LanczosOptions {
  int max_krylov_dim = 24;
  double tolerance = 1e-12;       // a-posteriori Krylov error per step
  double norm_tolerance = 1e-10;  // relative drift accepted (and removed) per step
  int max_halvings = 8;
};

/// Short-iterative-Lanczos stepping of exp(-2 pi i H dt) with H real
/// symmetric. Holds scratch space; one instance per thread.
class LanczosPropagator {
 public:
  LanczosPropagator(const RotorSystem& system, LanczosOptions options = {});

  /// psi <- exp(-2 pi i H(field) dt) psi. Negative dt steps backwards.
  void step(Eigen::VectorXcd& psi, double field_kvcm, double dt);
  /// psi <- exp(+2 pi i H(field) dt) psi computed as the forward step of the
  /// complex-conjugated packet (H is real).
  void step_back(Eigen::VectorXcd& psi, double field_kvcm, double dt);

  const RotorSystem& system() const { return *system_; }
  const LanczosOptions& options() const { return options_; }
  int largest_krylov_dim() const { return largest_dim_; }
  double mean_krylov_dim() const {
    return krylov_steps_ ? static_cast<double>(krylov_total_) / static_cast<double>(krylov_steps_) : 0.0;
  }
  std::size_t substeps() const { return substeps_; }

 private:
  void advance(Eigen::VectorXcd& psi, double field, double dt, int depth);
  void apply(double field, const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;

  const RotorSystem* system_;
  LanczosOptions options_;
  Eigen::MatrixXcd basis_;
  Eigen::VectorXcd work_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd beta_;
  Eigen::VectorXcd overlaps_;
  Eigen::VectorXcd rotated_;
  Eigen::VectorXcd coeff_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri_;
  int largest_dim_ = 0;
  std::size_t krylov_total_ = 0;
  std::size_t krylov_steps_ = 0;
  std::size_t substeps_ = 0;
};

/// Single step on a packet with at most `krylov_dim` Krylov vectors.
WavePacket lanczos_step(const RotorSystem& system, double field_kvcm, const WavePacket& psi,
                        double dt, int krylov_dim = 24);

enum class Direction { forward, backward };

struct TrajectorySample {
  double time = 0.0;
  double cos_z = 0.0;
  double cos_x = 0.0;
  double cos_mu = 0.0;
  double norm = 0.0;
  double field = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  WavePacket final_state;
};

/// Orientation expectation values of a packet (divided by its squared norm).
TrajectorySample observe(const RotorSystem& system, const Eigen::VectorXcd& psi, double time,
                         double field);

struct RecorderOptions {
  std::size_t stride = 1;  // record every stride-th grid node (plus the last)
};

/// Steps psi0 across the field grid. Forward runs t0 -> T with psi0 at t0;
/// backward runs T -> t0 with psi0 at T (the costate direction).
Trajectory propagate(const RotorSystem& system, const ControlField& field, const WavePacket& psi0,
                     Direction direction, RecorderOptions recorder = {},
                     LanczosOptions options = {});

inline constexpr std::size_t kDenseReferenceLimit = 500;

/// Exact per-step exponential by diagonalizing H(sample) each step. Oracle for
/// the Lanczos path; refuses bases larger than kDenseReferenceLimit.
Trajectory dense_reference_propagate(const RotorSystem& system, const ControlField& field,
                                     const WavePacket& psi0, Direction direction = Direction::forward,
                                     RecorderOptions recorder = {});

/// CSV: time_ns,cos_z,cos_x,cos_mu,norm,field_kvcm
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// CSV with a header whose first two columns are time_ns and field_kvcm (grid
/// nodes), as written by write_field_csv.
ControlField read_field_csv(const std::filesystem::path& path, double tau = 0.0);

}  // namespace rotoc
