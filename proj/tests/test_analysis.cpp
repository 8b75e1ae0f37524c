#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rotoc/analysis.hpp"
#include "support.hpp"

using namespace rotoc;

namespace {

std::vector<double> tone(double nu, double dt, std::size_t n, double amp = 1.0, double offset = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = offset + amp * std::sin(2 * std::numbers::pi * nu * dt * static_cast<double>(i));
  return x;
}

}  // namespace

TEST_CASE("spectrum: single tone peaks at its frequency") {
  const double dt = 1e-3;
  const std::size_t n = 5000;  // df = 0.2 GHz
  const auto s = power_spectrum(tone(4.0, dt, n), dt);
  CHECK(s.df == doctest::Approx(0.2));
  REQUIRE(s.peaks.size() == 1);
  CHECK(s.peaks[0].frequency_ghz == doctest::Approx(4.0));
  CHECK(s.peaks[0].power == 1.0);
  CHECK(*std::max_element(s.power.begin(), s.power.end()) == 1.0);
}

TEST_CASE("spectrum: constant signal is pure DC") {
  const std::vector<double> x(256, 3.0);
  const auto s = power_spectrum(x, 0.01);
  CHECK(s.power[0] == 1.0);
  for (std::size_t k = 1; k < s.power.size(); ++k) CHECK(s.power[k] < 1e-20);
  REQUIRE(s.peaks.size() == 1);
  CHECK(s.peaks[0].bin == 0);
}

TEST_CASE("spectrum: Parseval on random signals") {
  auto g = testing::rng(51);
  for (std::size_t n : {std::size_t{64}, std::size_t{255}, std::size_t{1000}}) {
    std::vector<double> x(n);
    for (auto& v : x) v = testing::uniform(g, -1.0, 1.0);
    const double dt = testing::uniform(g, 1e-3, 1e-1);
    const auto s = power_spectrum(x, dt);
    double time_side = 0.0;
    for (double v : x) time_side += v * v * dt;
    double freq_side = 0.0;
    for (double p : s.power) freq_side += p * s.scale * s.df;
    CHECK(freq_side == doctest::Approx(time_side).epsilon(1e-8));
  }
}

TEST_CASE("spectrum: normalization is idempotent and the band limit trims bins") {
  const auto s = power_spectrum(tone(2.0, 1e-3, 4000, 0.3, 0.1), 1e-3, 10.0);
  CHECK(s.frequencies.back() <= 10.0);
  CHECK(s.frequencies.size() == 41);
  const auto again = normalized(s);
  CHECK(again.power == s.power);
  CHECK(again.scale == s.scale);
}

TEST_CASE("spectrum: explicit time grid must be uniform") {
  std::vector<double> t{0.0, 0.1, 0.2, 0.35};
  std::vector<double> x{1, 2, 3, 4};
  CHECK_THROWS_AS(power_spectrum(t, x), std::invalid_argument);
  t[3] = 0.3;
  CHECK_NOTHROW(power_spectrum(t, x));
  CHECK_THROWS_AS(power_spectrum(std::vector<double>{1.0}, 0.1), std::invalid_argument);
}

TEST_CASE("peaks: prominence threshold and separation") {
  std::vector<double> p{0.0, 1.0, 0.0, 0.5, 0.49, 0.5, 0.0, 0.01, 0.0, 0.3, 0.31, 0.0};
  std::vector<double> f(p.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i);
  const auto peaks = find_peaks(p, f);
  std::vector<std::size_t> bins;
  for (const auto& pk : peaks) bins.push_back(pk.bin);
  // 0.01 bump is below 2% prominence; 3 and 5 are separated by 2 bins; 9 loses to 10
  CHECK(bins == std::vector<std::size_t>{1, 3, 5, 10});
  const auto wide = find_peaks(p, f, {0.02, 3});
  CHECK(wide.size() == 3);
}

TEST_CASE("assignment picks the nearest line within the window") {
  SpectrumResult s;
  s.peaks = {{1.36, 1.0, 1.0, 0, {}}, {3.0, 0.5, 0.5, 1, {}}};
  LineList lines;
  Transition a;
  a.lower = {0, 0, 0, 0};
  a.upper = {1, 0, 1, 0};
  a.frequency_ghz = 1.357;
  Transition b = a;
  b.frequency_ghz = 1.5;
  lines.transitions = {a, b};
  const auto out = assign_peaks(s, lines, 0.2);
  REQUIRE(out.peaks[0].assignment);
  CHECK(out.peaks[0].assignment->frequency_ghz == 1.357);
  CHECK(out.peaks[0].assignment_label() == "0_{0,0}0<->1_{0,1}0");
  CHECK(!out.peaks[1].assignment);
  CHECK(default_assignment_window(1.0) == 0.7);
  CHECK(default_assignment_window(5.0) == 0.2);
  CHECK(default_assignment_window(3.0) == doctest::Approx(0.45));
}

TEST_CASE("trajectory spectrum removes the mean") {
  Trajectory t;
  const double dt = 2e-3;
  for (int i = 0; i < 3000; ++i) {
    TrajectorySample s;
    s.time = i * dt;
    s.cos_z = 0.4 + 0.1 * std::cos(2 * std::numbers::pi * 5.0 * s.time);
    s.cos_x = -0.2;
    t.samples.push_back(s);
  }
  const auto z = trajectory_spectrum(t, OrientationAxis::z);
  REQUIRE(!z.peaks.empty());
  CHECK(z.peaks[0].frequency_ghz == doctest::Approx(5.0).epsilon(0.01));
  CHECK(z.power[0] < 1e-6);
  const auto x = trajectory_spectrum(t, OrientationAxis::x);
  CHECK(x.peaks.empty());
}
