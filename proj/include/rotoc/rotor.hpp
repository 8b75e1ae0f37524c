#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rotoc/angular.hpp"
#include "rotoc/molecule.hpp"

namespace rotoc {

/// Asymmetric-top label J_{Ka Kc} M.
struct StateLabel {
  int j = 0;
  int ka = 0;
  int kc = 0;
  int m = 0;

  /// "J_{Ka,Kc}M", e.g. "1_{0,1}0".
  std::string str() const;
  /// Parses str() output or the compact "J_KaKc_M" / "JKaKc" forms for single digits.
  static StateLabel parse(const std::string& text);

  friend bool operator==(const StateLabel&, const StateLabel&) = default;
};

class EigensolveError : public std::runtime_error {
 public:
  EigensolveError(int block_j, const std::string& what)
      : std::runtime_error(what), block_j_(block_j) {}
  int block_j() const { return block_j_; }

 private:
  int block_j_;
};

/// Field-free eigenstates, sorted by energy (MHz). Column i of `vectors` is
/// state i expanded in the |J K M> basis.
struct FieldFreeSolution {
  RotorBasis basis;
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
  std::vector<StateLabel> labels;

  std::size_t size() const { return labels.size(); }
  /// Throws std::out_of_range if the label is not present.
  std::size_t index_of(const StateLabel& label) const;
};

/// Diagonalizes each J block of H_rot separately. Within a block the
/// ascending eigenvalues receive (Ka, Kc) = (0,J), (1,J), (1,J-1), (2,J-1), ...
FieldFreeSolution field_free_eigensolve(const MoleculeSpec& mol, const RotorBasis& basis);

struct Transition {
  StateLabel lower;
  StateLabel upper;
  std::size_t lower_index = 0;
  std::size_t upper_index = 0;
  double frequency_ghz = 0.0;
  CosineAxis axis = CosineAxis::z;
  double strength = 0.0;  // |<upper| cos(theta_Z axis) |lower>|
};

struct LineList {
  std::vector<Transition> transitions;  // ascending frequency
};

inline constexpr double kLineStrengthThreshold = 1e-3;

/// Every pair of field-free states coupled by the requested direction
/// cosines with |matrix element| above `threshold`.
LineList transition_line_list(const FieldFreeSolution& sol, const std::set<CosineAxis>& axes,
                              double threshold = kLineStrengthThreshold);

/// mu * E / h in MHz for mu in Debye and E in kV/cm.
double dipole_field_to_frequency(double mu_debye, double field_kvcm);

enum class OrientationAxis { z, x, mu };

std::string to_string(OrientationAxis axis);
OrientationAxis parse_orientation_axis(const std::string& text);

/// Cached operators of one molecule in one basis. Immutable after
/// construction and shared by every propagation that uses it.
class RotorSystem {
 public:
  RotorSystem(MoleculeSpec mol, int jmax, int m = 0);

  const MoleculeSpec& molecule() const { return mol_; }
  const RotorBasis& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }

  const OperatorMatrix& rotational() const { return rotational_; }
  const OperatorMatrix& cos_z() const { return cos_z_; }
  const OperatorMatrix& cos_x() const { return cos_x_; }
  /// (mu_z Cz + mu_x Cx) / mu
  const OperatorMatrix& cos_mu() const { return cos_mu_; }
  const OperatorMatrix& cosine(OrientationAxis axis) const;
  /// mu_z Cz + mu_x Cx in Debye.
  const OperatorMatrix& dipole() const { return dipole_; }
  /// dH/dE = -kappa (mu_z Cz + mu_x Cx) in MHz per kV/cm.
  const OperatorMatrix& coupling() const { return coupling_; }

 private:
  MoleculeSpec mol_;
  RotorBasis basis_;
  OperatorMatrix rotational_;
  OperatorMatrix cos_z_;
  OperatorMatrix cos_x_;
  OperatorMatrix cos_mu_;
  OperatorMatrix dipole_;
  OperatorMatrix coupling_;
};

/// H = H_rot - E (mu_z Cz + mu_x Cx), MHz, with E in kV/cm.
OperatorMatrix assemble_hamiltonian(const RotorSystem& system, double field_kvcm);

/// Reads a molecule definition (JSON):
///   {"name": "...", "rotational_constants_mhz": {"x": .., "y": .., "z": ..},
///    "dipole_debye": {"x": .., "z": ..}}
MoleculeSpec load_molecule(const std::filesystem::path& path);
MoleculeSpec parse_molecule(const std::string& json_text);
/// "cpc" or a path to a molecule file.
MoleculeSpec resolve_molecule(const std::string& name_or_path);

}  // namespace rotoc
