#include "rotoc/angular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <utility>

namespace rotoc {

RotorBasis::RotorBasis(int jmax, int m) : jmax_(jmax), m_(m) {
  if (jmax < 0) throw std::invalid_argument("RotorBasis: jmax must be non-negative");
  if (std::abs(m) > jmax) throw std::invalid_argument("RotorBasis: |M| exceeds jmax");
  for (int j = std::abs(m); j <= jmax; ++j) {
    offsets_.push_back(elements_.size());
    for (int k = -j; k <= j; ++k) elements_.push_back({j, k, m});
  }
}

std::size_t RotorBasis::block_begin(int j) const {
  if (j < std::abs(m_) || j > jmax_) throw std::out_of_range("RotorBasis: J outside basis");
  return offsets_[static_cast<std::size_t>(j - std::abs(m_))];
}

std::size_t RotorBasis::index_of(int j, int k) const {
  if (std::abs(k) > j) throw std::out_of_range("RotorBasis: |K| > J");
  return block_begin(j) + static_cast<std::size_t>(k + j);
}

bool SelectionRule::allows(const BasisIndex& a, const BasisIndex& b) const {
  if (a.m != b.m || std::abs(a.j - b.j) > max_delta_j) return false;
  return std::find(delta_k.begin(), delta_k.end(), a.k - b.k) != delta_k.end();
}

OperatorMatrix::OperatorMatrix(RotorBasis basis, SelectionRule rule, std::vector<Entry> entries)
    : basis_(std::move(basis)), rule_(std::move(rule)) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::pair(a.row, a.col) < std::pair(b.row, b.col);
  });
  // merge repeated coordinates
  std::vector<Entry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  entries = std::move(merged);
  const std::size_t n = basis_.size();
  csr_.rows = n;
  csr_.cols = n;
  csr_.row_ptr.assign(n + 1, 0);
  for (const auto& e : entries) {
    if (e.row >= n || e.col >= n) throw std::out_of_range("OperatorMatrix: entry outside basis");
    csr_.row_ptr[e.row + 1]++;
    csr_.col_idx.push_back(e.col);
    csr_.values.push_back(e.value);
  }
  for (std::size_t i = 0; i < n; ++i) csr_.row_ptr[i + 1] += csr_.row_ptr[i];
}

double OperatorMatrix::element(std::size_t row, std::size_t col) const {
  for (std::size_t p = csr_.row_ptr[row]; p < csr_.row_ptr[row + 1]; ++p) {
    if (csr_.col_idx[p] == col) return csr_.values[p];
  }
  return 0.0;
}

Eigen::MatrixXd OperatorMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()),
                                            static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < csr_.rows; ++i) {
    for (std::size_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(csr_.col_idx[p])) += csr_.values[p];
    }
  }
  return m;
}

OperatorMatrix OperatorMatrix::combined(double a, const OperatorMatrix& other, double b) const {
  if (!(basis_ == other.basis_)) throw std::invalid_argument("OperatorMatrix: basis mismatch");
  std::map<std::pair<std::size_t, std::size_t>, double> sum;
  auto accumulate = [&sum](const CsrMatrix& m, double scale) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) sum[{i, m.col_idx[p]}] += scale * m.values[p];
    }
  };
  accumulate(csr_, a);
  accumulate(other.csr_, b);
  std::vector<Entry> entries;
  entries.reserve(sum.size());
  for (const auto& [key, value] : sum) entries.push_back({key.first, key.second, value});

  SelectionRule rule;
  rule.max_delta_j = std::max(rule_.max_delta_j, other.rule_.max_delta_j);
  rule.delta_k = rule_.delta_k;
  for (int dk : other.rule_.delta_k) {
    if (std::find(rule.delta_k.begin(), rule.delta_k.end(), dk) == rule.delta_k.end()) rule.delta_k.push_back(dk);
  }
  std::sort(rule.delta_k.begin(), rule.delta_k.end());
  return OperatorMatrix(basis_, std::move(rule), std::move(entries));
}

std::string to_string(CosineAxis axis) { return axis == CosineAxis::z ? "z" : "x"; }

OperatorMatrix rotor_kinetic_matrix(const MoleculeSpec& mol, const RotorBasis& basis) {
  mol.validate();
  const double sym = 0.5 * (mol.b_x + mol.b_y);
  const double asym = 0.25 * (mol.b_x - mol.b_y);
  std::vector<OperatorMatrix::Entry> entries;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto [j, k, m] = basis[i];
    const double jj = static_cast<double>(j) * (j + 1);
    entries.push_back({i, i, sym * (jj - k * k) + mol.b_z * k * k});
    if (k + 2 <= j && asym != 0.0) {
      const double c = asym * std::sqrt((jj - k * (k + 1.0)) * (jj - (k + 1.0) * (k + 2.0)));
      const std::size_t up = basis.index_of(j, k + 2);
      entries.push_back({i, up, c});
      entries.push_back({up, i, c});
    }
  }
  return OperatorMatrix(basis, SelectionRule{0, {-2, 0, 2}}, std::move(entries));
}

namespace {

// <J' K+q M| D^{1*}_{0q} |J K M>
double d1_element(int jp, int j, int k, int m, int q) {
  const int kp = k + q;
  if (std::abs(kp) > jp) return 0.0;
  const double a = wigner3j(jp, 1, j, m, 0, -m);
  if (a == 0.0) return 0.0;
  const double b = wigner3j(jp, 1, j, kp, -q, -k);
  if (b == 0.0) return 0.0;
  const int phase = ((m - k + q) % 2 == 0) ? 1 : -1;
  return phase * std::sqrt((2.0 * j + 1.0) * (2.0 * jp + 1.0)) * a * b;
}

}  // namespace

OperatorMatrix cos_theta_matrix(CosineAxis axis, const RotorBasis& basis) {
  std::vector<OperatorMatrix::Entry> entries;
  const int m = basis.m();
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const auto [j, k, mm] = basis[col];
    for (int jp = std::max(std::abs(m), j - 1); jp <= std::min(basis.jmax(), j + 1); ++jp) {
      if (axis == CosineAxis::z) {
        const double v = d1_element(jp, j, k, m, 0);
        if (v != 0.0) entries.push_back({basis.index_of(jp, k), col, v});
      } else {
        for (int q : {-1, 1}) {
          if (std::abs(k + q) > jp) continue;
          // (D*_{0,-1} - D*_{0,1}) / sqrt(2)
          const double v = (q == -1 ? 1.0 : -1.0) * d1_element(jp, j, k, m, q) / std::sqrt(2.0);
          if (v != 0.0) entries.push_back({basis.index_of(jp, k + q), col, v});
        }
      }
    }
  }
  SelectionRule rule = axis == CosineAxis::z ? SelectionRule{1, {0}} : SelectionRule{1, {-1, 1}};
  return OperatorMatrix(basis, std::move(rule), std::move(entries));
}

}  // namespace rotoc
