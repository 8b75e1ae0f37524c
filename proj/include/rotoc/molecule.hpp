#pragma once

#include <cmath>
#include <string>

namespace rotoc {

/// Rigid planar rotor: rotational constants in MHz, body-frame dipole in
/// Debye. The dipole lies in the xz plane (mu_y = 0).
struct MoleculeSpec {
  std::string name;
  double b_x = 0.0;
  double b_y = 0.0;
  double b_z = 0.0;
  double mu_x = 0.0;
  double mu_z = 0.0;

  double mu() const { return std::hypot(mu_x, mu_z); }

  /// Throws std::invalid_argument unless all constants are positive and mu > 0.
  void validate() const;

  /// 6-chloropyridazine-3-carbonitrile.
  static MoleculeSpec cpc();
};

}  // namespace rotoc
