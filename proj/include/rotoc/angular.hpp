#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rotoc/kernels.hpp"
#include "rotoc/molecule.hpp"
#include "rotoc/wigner.hpp"

namespace rotoc {

/// Symmetric-top function |J K M>.
struct BasisIndex {
  int j = 0;
  int k = 0;
  int m = 0;

  friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

/// All |J K M> with |M| <= J <= jmax and -J <= K <= J at a single M, ordered
/// lexicographically in (J, K).
class RotorBasis {
 public:
  RotorBasis(int jmax, int m);

  int jmax() const { return jmax_; }
  int m() const { return m_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<BasisIndex>& elements() const { return elements_; }
  const BasisIndex& operator[](std::size_t i) const { return elements_[i]; }

  /// Position of |J K M>; throws std::out_of_range if absent.
  std::size_t index_of(int j, int k) const;
  /// First index of the J block; the block has 2J+1 entries.
  std::size_t block_begin(int j) const;

  friend bool operator==(const RotorBasis& a, const RotorBasis& b) {
    return a.jmax_ == b.jmax_ && a.m_ == b.m_;
  }

 private:
  int jmax_;
  int m_;
  std::vector<BasisIndex> elements_;
  std::vector<std::size_t> offsets_;
};

/// Couplings an operator may have: |dJ| <= max_delta_j and dK in delta_k.
struct SelectionRule {
  int max_delta_j = 0;
  std::vector<int> delta_k;

  bool allows(const BasisIndex& a, const BasisIndex& b) const;
};

/// Real symmetric operator in a RotorBasis, stored sparse.
class OperatorMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  OperatorMatrix(RotorBasis basis, SelectionRule rule, std::vector<Entry> entries);

  const RotorBasis& basis() const { return basis_; }
  const SelectionRule& rule() const { return rule_; }
  const CsrMatrix& csr() const { return csr_; }
  std::size_t size() const { return basis_.size(); }

  double element(std::size_t row, std::size_t col) const;
  Eigen::MatrixXd dense() const;

  /// a*this + b*other on the union pattern; both must share the basis.
  OperatorMatrix combined(double a, const OperatorMatrix& other, double b) const;

 private:
  RotorBasis basis_;
  SelectionRule rule_;
  CsrMatrix csr_;
};

enum class CosineAxis { z, x };

std::string to_string(CosineAxis axis);

/// Field-free rotor B_x Jx^2 + B_y Jy^2 + B_z Jz^2 (MHz). Couples K <-> K+-2
/// inside each J block.
OperatorMatrix rotor_kinetic_matrix(const MoleculeSpec& mol, const RotorBasis& basis);

/// Direction cosine between a body axis and the lab Z axis.
///
/// Conventions (used everywhere in this library):
///   - Euler angles (phi, theta, chi), active z-y-z rotation body -> lab;
///     D^j_{mk} = exp(-i m phi) d^j_{mk}(theta) exp(-i k chi).
///   - <Omega|J K M> = sqrt((2J+1)/(8 pi^2)) D^{J*}_{MK}(Omega).
///   - cos(theta_Zz) = cos(theta) = D^{1*}_{00}.
///   - cos(theta_Zx) = -sin(theta) cos(chi) = (D^{1*}_{0,-1} - D^{1*}_{0,1}) / sqrt(2).
/// With these choices every element is real and the matrices are symmetric.
OperatorMatrix cos_theta_matrix(CosineAxis axis, const RotorBasis& basis);

}  // namespace rotoc
