#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rotoc/control.hpp"
#include "rotoc/units.hpp"
#include "support.hpp"

using namespace rotoc;

namespace {

// Small, fast optimization problem shared by the iteration tests.
KrotovConfig small_config() {
  KrotovConfig c;
  c.target_axis = OrientationAxis::z;
  c.mask = {0.3, 1e6};
  c.dt = 1e-3;
  c.max_iterations = 40;
  return c;
}

const RotorSystem& small_system() {
  static const RotorSystem sys(MoleculeSpec::cpc(), 3, 0);
  return sys;
}

// -(S/alpha) Im sum_ij conj(chi_i) mu_ij psi_j in atomic units, back in kV/cm
double naive_update(const RotorSystem& sys, const Eigen::VectorXcd& chi, const Eigen::VectorXcd& psi, double t,
                    const MaskSpec& spec) {
  const Eigen::MatrixXd mu = sys.dipole().dense() / units::kAuDipoleDebye;
  std::complex<double> sum = 0.0;
  for (Eigen::Index i = 0; i < chi.size(); ++i)
    for (Eigen::Index j = 0; j < psi.size(); ++j) sum += std::conj(chi(i)) * mu(i, j) * psi(j);
  return -mask_value(t, spec) / spec.alpha * sum.imag() * units::kAuFieldKVcm;
}

}  // namespace

TEST_CASE("mask and window") {
  const MaskSpec s{2.0, 1e6};
  CHECK(mask_value(0.0, s) == 1.0);
  CHECK(mask_value(1.0, s) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mask_value(-1.0, s) == doctest::Approx(0.5).epsilon(1e-15));
  const auto [t0, t1] = time_window(1.0);
  CHECK(t1 == doctest::Approx(2.5288).epsilon(1e-4));
  CHECK(t0 == -t1);
  CHECK(time_window(5.0).second == doctest::Approx(12.644).epsilon(1e-4));
  CHECK(mask_value(time_window(3.0).second, {3.0, 1.0}) == doctest::Approx(kMaskFloor).epsilon(1e-10));
  CHECK_THROWS_AS(time_window(0.0), std::invalid_argument);
  CHECK_THROWS_AS((MaskSpec{1.0, -1.0}.validate()), std::invalid_argument);
  // steps tile the window with spacing no larger than requested
  for (double dt : {1e-3, 7e-3, 0.05}) {
    const auto n = window_steps(1.0, dt);
    CHECK((t1 - t0) / static_cast<double>(n) <= dt * (1 + 1e-12));
    CHECK((t1 - t0) / static_cast<double>(n - 1) > dt);
  }
}

TEST_CASE("field scale: mu / alpha in kV/cm") {
  const auto mol = MoleculeSpec::cpc();
  // 5.2 D = 2.046 e a0; times 5.142e6 kV/cm per atomic unit, over 1e6
  CHECK(field_scale_kvcm(mol, 1e6) == doctest::Approx(mol.mu() / 2.541746 * 5.142207).epsilon(1e-5));
  CHECK(field_scale_kvcm(mol, 1e5) == doctest::Approx(10.0 * field_scale_kvcm(mol, 1e6)));
}

TEST_CASE("functional terms") {
  const auto& sys = small_system();
  const auto sol = field_free_eigensolve(sys.molecule(), sys.basis());
  const MaskSpec spec{0.5, 1e6};
  const auto zero = ControlField::sampled(-1.0, 1.0, 100, [](double) { return 0.0; });
  const auto ground = eigenstate_packet(sol, {0, 0, 0, 0}, 1.0);
  const auto terms = functional_terms(sys, zero, ground, spec, OrientationAxis::z);
  CHECK(terms.penalty == 0.0);
  CHECK(terms.observable == doctest::Approx(1.0).epsilon(1e-14));

  // the best oriented state in the basis approaches the bound J_o = 2
  const RotorSystem big(MoleculeSpec::cpc(), 15, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(big.cos_z().dense());
  const Eigen::VectorXcd top = es.eigenvectors().col(es.eigenvalues().size() - 1).cast<std::complex<double>>();
  const auto zero_big = ControlField::sampled(-1.0, 1.0, 10, [](double) { return 0.0; });
  const double jo = functional_terms(big, zero_big, {top, 1.0}, spec, OrientationAxis::z).observable;
  CHECK(jo == doctest::Approx(1.0 + es.eigenvalues().maxCoeff()));
  CHECK(jo > 1.98);
  CHECK(jo <= 2.0);
  CHECK(functional_terms(big, zero_big, {top, 1.0}, spec, OrientationAxis::z, 3.0).observable ==
        doctest::Approx(jo + 2.0));

  // penalty: midpoint sum of -alpha E^2 / S dt in atomic units
  auto f = ControlField::sampled(-1.0, 1.0, 400, [](double t) { return 0.3 * std::cos(3.0 * t); });
  double want = 0.0;
  for (std::size_t k = 0; k < f.steps(); ++k) {
    const double e = f.sample(k) / units::kAuFieldKVcm;
    want += e * e / mask_value(f.midpoint(k), spec) * (f.dt() / units::kAuTimeNs);
  }
  CHECK(penalty_term(f, spec) == doctest::Approx(-spec.alpha * want).epsilon(1e-13));
  CHECK(penalty_term(f, spec) < 0.0);
}

TEST_CASE("field update: trivial zeros and the double-loop oracle") {
  auto g = testing::rng(41);
  const MaskSpec spec{1.0, 1e6};
  {
    const RotorSystem sys(testing::random_molecule(g), 1, 1);  // three states
    for (int trial = 0; trial < 20; ++trial) {
      const auto psi = testing::random_state(g, 3);
      const auto chi = testing::random_state(g, 3);
      const double t = testing::uniform(g, -1.0, 1.0);
      const double got = field_update(sys, chi, psi, t, spec);
      CHECK(got == doctest::Approx(naive_update(sys, chi, psi, t, spec)).epsilon(1e-12));
      // a real multiple of psi gives a real expectation value
      CHECK(std::abs(field_update(sys, 2.5 * psi, psi, t, spec)) < 1e-15);
    }
  }
  const auto& sys = small_system();
  const auto n = static_cast<Eigen::Index>(sys.size());
  const auto psi = testing::random_state(g, n);
  const Eigen::MatrixXd mu = sys.dipole().dense();
  Eigen::VectorXcd mpsi = mu.cast<std::complex<double>>() * psi;
  Eigen::VectorXcd chi = testing::random_state(g, n);
  chi -= (mpsi.dot(chi) / mpsi.squaredNorm()) * mpsi;
  CHECK(std::abs(field_update(sys, chi, psi, 0.0, spec)) < 1e-12);
}

TEST_CASE("initial guess") {
  const auto& sys = small_system();
  auto c = small_config();
  const auto f = initial_guess_field(sys, c);
  const auto [t0, t1] = time_window(c.mask.tau);
  CHECK(f.t0() == doctest::Approx(t0));
  CHECK(f.t_end() == doctest::Approx(t1));
  CHECK(f.steps() == window_steps(c.mask.tau, c.dt));
  const double amp = 0.05 * field_scale_kvcm(sys.molecule(), c.mask.alpha);
  double peak = 0.0;
  for (double e : f.samples()) peak = std::max(peak, std::abs(e));
  CHECK(peak <= amp);
  CHECK(peak > 0.5 * amp);

  c.guess.perturbation = 0.1;
  c.guess.seed = 5;
  const auto p1 = initial_guess_field(sys, c);
  const auto p2 = initial_guess_field(sys, c);
  c.guess.seed = 6;
  const auto p3 = initial_guess_field(sys, c);
  CHECK(std::equal(p1.samples().begin(), p1.samples().end(), p2.samples().begin()));
  CHECK(!std::equal(p1.samples().begin(), p1.samples().end(), p3.samples().begin()));
}

TEST_CASE("krotov: monotone history, bounded field, checkpoint equivalence") {
  const auto& sys = small_system();
  auto c = small_config();
  const auto full = krotov_optimize(sys, c);
  REQUIRE(full.history.size() >= 2);
  CHECK(full.rejected.empty());
  CHECK(full.iterations > 10);
  CHECK(full.history.back().total() > full.history.front().total());
  for (std::size_t i = 1; i < full.history.size(); ++i) {
    CHECK(full.history[i].total() >= full.history[i - 1].total() - 1e-8);
    CHECK(full.history[i].schrodinger == 0.0);
  }
  CHECK(full.cos_z > 0.0);

  // |E| <= (S/alpha) mu |chi| |psi| with |chi| <= |O| <= 2
  const double scale = field_scale_kvcm(sys.molecule(), c.mask.alpha);
  for (std::size_t k = 0; k < full.field.steps(); ++k) {
    CHECK(std::abs(full.field.sample(k)) <= 2.0 * scale * mask_value(full.field.midpoint(k), c.mask) * (1 + 1e-12));
  }

  // the final trajectory reproduces the reported orientation
  const auto& last = full.trajectory.samples.back();
  CHECK(last.cos_z == full.cos_z);
  CHECK(std::abs(last.norm - 1.0) < 1e-10);

  auto cc = c;
  cc.checkpoint_stride = 37;
  const auto ck = krotov_optimize(sys, cc);
  REQUIRE(ck.field.steps() == full.field.steps());
  double gap = 0.0;
  for (std::size_t k = 0; k < ck.field.steps(); ++k) gap = std::max(gap, std::abs(ck.field.sample(k) - full.field.sample(k)));
  CHECK(gap < 1e-10);
  CHECK(ck.cos_z == doctest::Approx(full.cos_z).epsilon(1e-10));
}

TEST_CASE("krotov: gauge of the observable at the fixed point") {
  const auto& sys = small_system();
  auto c = small_config();
  c.max_iterations = 400;
  c.functional_tolerance = 1e-12;
  const auto converged = krotov_optimize(sys, c);
  CHECK(converged.rejected.empty());
  CHECK(converged.converged);

  auto one_sweep = [&](double shift) {
    auto s = c;
    s.initial_field = converged.field;
    s.max_iterations = 1;
    s.observable_shift = shift;
    s.monotonic_tolerance = 1.0;
    return krotov_optimize(sys, s).field;
  };
  const auto a = one_sweep(1.0);
  const auto b = one_sweep(2.0);
  double gap = 0.0;
  for (std::size_t k = 0; k < a.steps(); ++k) gap = std::max(gap, std::abs(a.sample(k) - b.sample(k)));
  MESSAGE("gauge gap " << gap << " kV/cm");
  CHECK(gap < 1e-6);
}

TEST_CASE("krotov: converged orientation is stable under step halving") {
  const auto& sys = small_system();
  auto c = small_config();
  c.max_iterations = 400;
  const auto coarse = krotov_optimize(sys, c);
  c.dt /= 2.0;
  const auto fine = krotov_optimize(sys, c);
  CHECK(coarse.converged);
  CHECK(fine.converged);
  CHECK(fine.rejected.empty());
  CHECK(std::abs(fine.cos_z - coarse.cos_z) < 1e-4);
  CHECK(std::abs(fine.peak_field() - coarse.peak_field()) < 1e-3 * coarse.peak_field());
}

TEST_CASE("krotov: infinite penalty keeps the field off") {
  const auto& sys = small_system();
  auto c = small_config();
  c.mask.alpha = 1e12;
  c.max_iterations = 5;
  const auto r = krotov_optimize(sys, c);
  // the update is bounded by 2 mu / alpha, about 2e-5 kV/cm here
  CHECK(r.peak_field() <= 2.0 * field_scale_kvcm(sys.molecule(), c.mask.alpha));
  CHECK(std::abs(r.cos_z) < 1e-5);
  CHECK(r.history.back().observable == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("krotov: rejected iterations roll back with a warning") {
  const auto& sys = small_system();
  auto c = small_config();
  c.monotonic_tolerance = -1.0;  // demand an impossible gain of one per iteration
  const auto r = krotov_optimize(sys, c);
  CHECK(r.rejected.size() == 1);
  CHECK(r.iterations == 0);
  CHECK(r.history.size() == 1);
  CHECK(!r.warnings.empty());
  const auto guess = initial_guess_field(sys, c);
  CHECK(std::equal(guess.samples().begin(), guess.samples().end(), r.field.samples().begin()));
}

TEST_CASE("feedback step: divides dt only when the gain is too large") {
  const auto mol = MoleculeSpec::cpc();
  auto c = small_config();
  CHECK(feedback_dt(mol, c) == c.dt);  // alpha 1e6: gain ~0.09
  c.mask.alpha = 1e5;                  // gain ~0.87
  CHECK(feedback_dt(mol, c) == doctest::Approx(c.dt / 2));
  c.dt = 2e-3;
  CHECK(feedback_dt(mol, c) == doctest::Approx(c.dt / 4));
  c.feedback_gain_limit = 0.0;
  CHECK(feedback_dt(mol, c) == c.dt);
  const double mu = units::debye_to_au(mol.mu());
  for (double alpha : {1e4, 3e4, 1e5, 7e5}) {
    c.mask.alpha = alpha;
    c.feedback_gain_limit = 0.5;
    const double gain = mu * mu * units::ns_to_au(feedback_dt(mol, c)) / (2 * alpha);
    CHECK(gain <= 0.5 + 1e-12);
  }
  c.dt = -1.0;
  CHECK_THROWS_AS(feedback_dt(mol, c), std::invalid_argument);
}

TEST_CASE("krotov: strong fields stay monotone with the feedback step") {
  const auto& sys = small_system();
  auto c = small_config();
  c.mask.alpha = 1e5;
  c.dt = 2e-3;
  c.max_iterations = 20;
  c.feedback_gain_limit = 0.0;
  const auto coarse = krotov_optimize(sys, c);
  CHECK(!coarse.rejected.empty());  // the update overshoots at gain ~1.7
  c.feedback_gain_limit = 0.5;
  const auto fine = krotov_optimize(sys, c);
  CHECK(fine.rejected.empty());
  CHECK(fine.iterations == 20);
  CHECK(fine.field.dt() <= 5e-4 + 1e-15);
}

TEST_CASE("krotov: invalid configurations") {
  const auto& sys = small_system();
  auto c = small_config();
  c.mask.tau = -1.0;
  CHECK_THROWS_AS(krotov_optimize(sys, c), std::invalid_argument);
  c = small_config();
  c.initial_state = {7, 0, 7, 0};
  CHECK_THROWS(krotov_optimize(sys, c));
}
