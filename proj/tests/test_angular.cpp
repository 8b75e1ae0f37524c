#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "rotoc/angular.hpp"
#include "support.hpp"

using namespace rotoc;

namespace {

constexpr double kPi = std::numbers::pi;

// <J'K'M| f |JKM> with the phi and chi integrals done by hand and theta by
// Gauss-Legendre over the explicit d-matrices.
double quadrature_element(CosineAxis axis, int jp, int kp, int j, int k, int m) {
  using boost::math::quadrature::gauss;
  const double norm = std::sqrt((2.0 * j + 1.0) * (2.0 * jp + 1.0));
  if (axis == CosineAxis::z) {
    if (kp != k) return 0.0;
    auto f = [&](double t) {
      return testing::wigner_small_d(jp, m, kp, t) * testing::wigner_small_d(j, m, k, t) * std::cos(t) * std::sin(t);
    };
    return 0.5 * norm * gauss<double, 40>::integrate(f, 0.0, kPi);
  }
  // -sin(theta) cos(chi): chi integral is pi for K' = K +- 1
  if (std::abs(kp - k) != 1) return 0.0;
  auto f = [&](double t) {
    return testing::wigner_small_d(jp, m, kp, t) * testing::wigner_small_d(j, m, k, t) * std::sin(t) * std::sin(t);
  };
  return -0.25 * norm * gauss<double, 40>::integrate(f, 0.0, kPi);
}

}  // namespace

TEST_CASE("basis: size, ordering and lookup") {
  for (int jmax : {0, 1, 4, 9}) CHECK(RotorBasis(jmax, 0).size() == static_cast<std::size_t>((jmax + 1) * (jmax + 1)));
  const RotorBasis b(5, 2);
  std::size_t expected = 0;
  for (int j = 2; j <= 5; ++j) expected += 2 * j + 1;
  CHECK(b.size() == expected);
  CHECK(b[0] == BasisIndex{2, -2, 2});
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index_of(b[i].j, b[i].k) == i);
  CHECK_THROWS_AS(RotorBasis(2, 3), std::invalid_argument);
  CHECK_THROWS_AS(RotorBasis(-1, 0), std::invalid_argument);
  CHECK_THROWS_AS(b.index_of(1, 0), std::out_of_range);
  CHECK_THROWS_AS(b.index_of(3, 4), std::out_of_range);
}

TEST_CASE("direction cosines match Euler-angle quadrature") {
  for (int m : {0, 1, -2}) {
    const RotorBasis b(4, m);
    for (auto axis : {CosineAxis::z, CosineAxis::x}) {
      const auto mat = cos_theta_matrix(axis, b);
      for (std::size_t r = 0; r < b.size(); ++r)
        for (std::size_t c = 0; c < b.size(); ++c) {
          const double want = quadrature_element(axis, b[r].j, b[r].k, b[c].j, b[c].k, m);
          CHECK(mat.element(r, c) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
        }
    }
  }
}

TEST_CASE("direction cosines: hand-checked elements") {
  const RotorBasis b(1, 0);
  const auto cz = cos_theta_matrix(CosineAxis::z, b);
  CHECK(cz.element(b.index_of(1, 0), b.index_of(0, 0)) == doctest::Approx(1.0 / std::sqrt(3.0)));
  const auto cx = cos_theta_matrix(CosineAxis::x, b);
  // -sin(theta)cos(chi) |000> is proportional to |1,-1> - |1,1>
  const double lo = cx.element(b.index_of(1, -1), b.index_of(0, 0));
  const double hi = cx.element(b.index_of(1, 1), b.index_of(0, 0));
  CHECK(lo == doctest::Approx(-hi));
  CHECK(std::hypot(lo, hi) == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("direction cosines: symmetric with spectrum inside [-1, 1]") {
  for (int jmax : {5, 10}) {
    for (int m : {0, 3}) {
      const RotorBasis b(jmax, m);
      for (auto axis : {CosineAxis::z, CosineAxis::x}) {
        const Eigen::MatrixXd d = cos_theta_matrix(axis, b).dense();
        CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
        CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-12);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("direction cosines: selection rules") {
  const RotorBasis b(6, 1);
  const auto cz = cos_theta_matrix(CosineAxis::z, b);
  const auto cx = cos_theta_matrix(CosineAxis::x, b);
  for (std::size_t r = 0; r < b.size(); ++r)
    for (std::size_t c = 0; c < b.size(); ++c) {
      if (cz.element(r, c) != 0.0) CHECK(cz.rule().allows(b[r], b[c]));
      if (cx.element(r, c) != 0.0) CHECK(cx.rule().allows(b[r], b[c]));
    }
}

TEST_CASE("kinetic matrix: closed-form J = 1 and J = 2 levels") {
  auto g = testing::rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mol = testing::random_molecule(g);
    const double bx = mol.b_x, by = mol.b_y, bz = mol.b_z;
    const RotorBasis b(2, 0);
    const Eigen::MatrixXd h = rotor_kinetic_matrix(mol, b).dense();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(h.block(1, 1, 3, 3));
    Eigen::Vector3d want1(bx + by, by + bz, bx + bz);
    std::sort(want1.data(), want1.data() + 3);
    for (int i = 0; i < 3; ++i) CHECK(e1.eigenvalues()(i) == doctest::Approx(want1(i)).epsilon(1e-12));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(h.block(4, 4, 5, 5));
    const double s = bx + by + bz;
    const double root = std::sqrt(s * s - 3.0 * (bx * by + by * bz + bz * bx));
    std::vector<double> want2{4 * bx + by + bz, bx + 4 * by + bz, bx + by + 4 * bz, 2 * s + 2 * root, 2 * s - 2 * root};
    std::sort(want2.begin(), want2.end());
    for (int i = 0; i < 5; ++i) CHECK(e2.eigenvalues()(i) == doctest::Approx(want2[i]).epsilon(1e-12));
  }
}

TEST_CASE("kinetic matrix: block trace and x <-> y relabeling") {
  auto g = testing::rng(12);
  const auto mol = testing::random_molecule(g);
  const RotorBasis b(4, 0);
  const Eigen::MatrixXd h = rotor_kinetic_matrix(mol, b).dense();
  for (int j = 0; j <= 4; ++j) {
    const auto at = static_cast<Eigen::Index>(b.block_begin(j));
    const double trace = h.block(at, at, 2 * j + 1, 2 * j + 1).trace();
    CHECK(trace == doctest::Approx(j * (j + 1.0) * (2 * j + 1.0) / 3.0 * (mol.b_x + mol.b_y + mol.b_z)));
  }
  auto swapped = mol;
  std::swap(swapped.b_x, swapped.b_y);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(rotor_kinetic_matrix(swapped, b).dense());
  CHECK((a.eigenvalues() - s.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
  // no coupling between J blocks
  for (std::size_t r = 0; r < b.size(); ++r)
    for (std::size_t c = 0; c < b.size(); ++c)
      if (b[r].j != b[c].j) CHECK(h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) == 0.0);
}

TEST_CASE("operator matrix: merge, combine and bounds") {
  const RotorBasis b(1, 0);
  const OperatorMatrix a(b, {0, {0}}, {{0, 0, 1.0}, {0, 0, 2.0}, {3, 3, -1.0}});
  CHECK(a.element(0, 0) == 3.0);
  CHECK(a.csr().nonzeros() == 2);
  const auto cz = cos_theta_matrix(CosineAxis::z, b);
  const auto sum = a.combined(2.0, cz, -0.5);
  CHECK((sum.dense() - (2.0 * a.dense() - 0.5 * cz.dense())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(sum.rule().max_delta_j == 1);
  CHECK_THROWS_AS(OperatorMatrix(b, {0, {0}}, {{9, 0, 1.0}}), std::out_of_range);
  CHECK_THROWS_AS(a.combined(1.0, cos_theta_matrix(CosineAxis::z, RotorBasis(2, 0)), 1.0), std::invalid_argument);
}
