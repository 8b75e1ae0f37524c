#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rotoc/dynamics.hpp"
#include "rotoc/rotor.hpp"

namespace rotoc {

/// Gaussian mask S(t) = exp(-4 ln2 t^2 / tau^2) and the penalty weight alpha.
/// alpha is a bare number applied in atomic units (see field_update).
struct MaskSpec {
  double tau = 1.0;  // FWHM, ns
  double alpha = 1e6;

  void validate() const;
};

double mask_value(double t, const MaskSpec& spec);

/// Mask value at the window edge: S(+-T) = 1 / (5e7).
inline constexpr double kMaskFloor = 2e-8;

/// Symmetric window [-T, T] with S(T) = kMaskFloor, i.e. T = 2.5288 tau.
std::pair<double, double> time_window(double tau);

/// Uniform steps of at most `dt` covering the window exactly.
std::size_t window_steps(double tau, double dt);

/// Largest field (kV/cm) the update can produce per unit |<chi|mu|psi>| / mu:
/// mu / alpha converted from atomic units.
double field_scale_kvcm(const MoleculeSpec& mol, double alpha);

struct FunctionalTerms {
  double penalty = 0.0;     // J_p = -alpha * int E^2 / S dt   (atomic units)
  double observable = 0.0;  // J_o = <psi(T)| O |psi(T)>
};

/// Field-fluence penalty of a field on the canonical grid (midpoint rule,
/// exact for the step-wise constant field).
double penalty_term(const ControlField& field, const MaskSpec& spec);

/// J_p and J_o with O = cos(theta_Z axis) + shift.
FunctionalTerms functional_terms(const RotorSystem& system, const ControlField& field,
                                 const WavePacket& psi_final, const MaskSpec& spec,
                                 OrientationAxis axis, double shift = 1.0);

/// E(t) = -(S(t)/alpha) Im <chi| mu_z Cz + mu_x Cx |psi>, evaluated in atomic
/// units and returned in kV/cm.
double field_update(const RotorSystem& system, const Eigen::VectorXcd& chi, const Eigen::VectorXcd& psi,
                    double t, const MaskSpec& spec);

struct InitialGuess {
  double amplitude_scale = 0.05;  // E_g = amplitude_scale * field_scale_kvcm
  double frequency_ghz = 0.0;     // 0: lowest line from the initial state for the target axis
  double perturbation = 0.0;      // relative uniform noise on the seed, 0 = none
  std::uint64_t seed = 0;
};

struct KrotovConfig {
  OrientationAxis target_axis = OrientationAxis::z;
  StateLabel initial_state{0, 0, 0, 0};
  MaskSpec mask;
  double dt = 1e-3;  // ns, upper bound; the grid is adjusted to fit the window
  // Largest immediate-feedback gain mu^2 dt / (2 alpha) (atomic units) per
  // step; strong-field runs get dt divided to stay below it. 0 disables.
  double feedback_gain_limit = 0.5;
  LanczosOptions lanczos;
  int max_iterations = 500;
  double functional_tolerance = 1e-6;
  int patience = 5;                    // consecutive small steps before stopping
  double monotonic_tolerance = 1e-8;   // accepted decrease of J_p + J_o per iteration
  double observable_shift = 1.0;       // O = C + shift
  InitialGuess guess;
  std::optional<ControlField> initial_field;  // overrides `guess` when set
  std::size_t checkpoint_stride = 0;   // 0: keep the costate at every node
  std::function<void(int, double, double)> on_iteration;  // (iteration, J_p, J_o)
};

struct IterationRecord {
  int iteration = 0;
  double schrodinger = 0.0;  // J_S, zero because psi is propagated exactly
  double penalty = 0.0;
  double observable = 0.0;
  double total() const { return penalty + observable; }
};

struct KrotovResult {
  ControlField field;
  std::vector<IterationRecord> history;
  std::vector<IterationRecord> rejected;  // iterations rolled back as non-monotonic
  Trajectory trajectory;
  double cos_z = 0.0;
  double cos_x = 0.0;
  double cos_mu = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
  double guess_frequency_ghz = 0.0;

  double peak_field() const;
  /// int E^2 dt in (kV/cm)^2 ns.
  double fluence() const;
};

/// Step the optimizer uses: config.dt divided by the smallest integer that
/// keeps the feedback gain within config.feedback_gain_limit. Above about 1
/// the update overshoots and the iteration stops being monotone.
double feedback_dt(const MoleculeSpec& mol, const KrotovConfig& config);

/// Guess seed S(t) E_g sin(2 pi nu t) on the canonical grid of `config`.
ControlField initial_guess_field(const RotorSystem& system, const KrotovConfig& config);

/// Krotov iteration with immediate feedback. Each iteration propagates the
/// costate chi(T) = O psi(T) back under the current field, then re-propagates
/// psi forward while rebuilding the field step by step from the freshest psi.
KrotovResult krotov_optimize(const RotorSystem& system, const KrotovConfig& config);
KrotovResult krotov_optimize(const MoleculeSpec& mol, int jmax, const KrotovConfig& config);

/// CSV: t_mid_ns,field_kvcm,envelope_kvcm where envelope = S(t) mu / alpha.
void write_field_csv(const std::filesystem::path& path, const ControlField& field,
                     const MoleculeSpec& mol, const MaskSpec& spec);
/// CSV: iteration,J_S,J_p,J_o,total
void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

}  // namespace rotoc
