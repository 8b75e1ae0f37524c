#pragma once
// Shared generators and independent oracles for the unit tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rotoc/molecule.hpp"

namespace testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Eigen::VectorXcd random_state(std::mt19937_64& g, Eigen::Index n) {
  Eigen::VectorXcd v(n);
  std::normal_distribution<double> d;
  for (Eigen::Index i = 0; i < n; ++i) v(i) = {d(g), d(g)};
  return v / v.norm();
}

// Random asymmetric top with B_x > B_y, MHz-scale constants.
inline rotoc::MoleculeSpec random_molecule(std::mt19937_64& g) {
  rotoc::MoleculeSpec m;
  m.name = "random";
  m.b_y = uniform(g, 300.0, 2000.0);
  m.b_x = m.b_y + uniform(g, 10.0, 800.0);
  m.b_z = m.b_x + uniform(g, 100.0, 6000.0);
  m.mu_x = uniform(g, 0.5, 5.0);
  m.mu_z = uniform(g, 0.5, 5.0);
  return m;
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

// Wigner small-d d^j_{m' m}(beta) from Wigner's explicit sum.
inline double wigner_small_d(int j, int mp, int m, double beta) {
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);
  const double pre = std::sqrt(factorial(j + mp) * factorial(j - mp) * factorial(j + m) * factorial(j - m));
  double sum = 0.0;
  for (int k = 0; k <= 2 * j; ++k) {
    const int a = j + m - k, b = k, cc = j - k - mp, d = k - m + mp;
    if (a < 0 || cc < 0 || d < 0) continue;
    const double term = ((k - m + mp) % 2 == 0 ? 1.0 : -1.0) /
                        (factorial(a) * factorial(b) * factorial(cc) * factorial(d));
    sum += term * std::pow(c, 2 * j + m - mp - 2 * k) * std::pow(s, mp - m + 2 * k);
  }
  return pre * sum;
}

// Dense exp(-i * phase * H) psi via the eigendecomposition of real symmetric H.
inline Eigen::VectorXcd dense_exp_apply(const Eigen::MatrixXd& h, double phase, const Eigen::VectorXcd& psi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::MatrixXcd v = es.eigenvectors().cast<std::complex<double>>();
  Eigen::VectorXcd c = v.adjoint() * psi;
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -phase * es.eigenvalues()(i));
  return v * c;
}

}  // namespace testing
