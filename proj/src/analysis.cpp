#include "rotoc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "rotoc/kernels.hpp"

namespace rotoc {

std::string Peak::assignment_label() const {
  if (!assignment) return "";
  return assignment->lower.str() + "<->" + assignment->upper.str();
}

SpectrumResult power_spectrum(std::span<const double> signal, double dt, double max_frequency_ghz,
                              PeakOptions options) {
  const std::size_t n = signal.size();
  if (n < 2) throw std::invalid_argument("power_spectrum: need at least two samples");
  if (!(dt > 0.0)) throw std::invalid_argument("power_spectrum: dt must be positive");
  const double df = 1.0 / (static_cast<double>(n) * dt);
  std::size_t bins = n / 2 + 1;
  if (max_frequency_ghz > 0.0) {
    bins = std::min(bins, static_cast<std::size_t>(std::floor(max_frequency_ghz / df)) + 1);
  }

  SpectrumResult out;
  out.df = df;
  out.power = kernels::dft_power(signal, bins);
  out.frequencies.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.frequencies[k] = df * static_cast<double>(k);
    // one-sided: fold negative frequencies except at DC and Nyquist
    const bool single = k == 0 || (n % 2 == 0 && k == n / 2);
    out.power[k] *= (single ? 1.0 : 2.0) * dt * dt;
  }
  out.scale = 1.0;
  out = normalized(std::move(out));
  out.peaks = find_peaks(out.power, out.frequencies, options);
  return out;
}

SpectrumResult power_spectrum(std::span<const double> times, std::span<const double> signal,
                              double max_frequency_ghz, PeakOptions options) {
  if (times.size() != signal.size()) throw std::invalid_argument("power_spectrum: size mismatch");
  if (times.size() < 2) throw std::invalid_argument("power_spectrum: need at least two samples");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * std::abs(dt)) {
      throw std::invalid_argument("power_spectrum: non-uniform sampling at index " + std::to_string(i));
    }
  }
  return power_spectrum(signal, dt, max_frequency_ghz, options);
}

SpectrumResult normalized(SpectrumResult spectrum) {
  const auto it = std::max_element(spectrum.power.begin(), spectrum.power.end());
  if (it == spectrum.power.end() || *it <= 0.0) return spectrum;
  const double peak = *it;
  if (peak == 1.0) return spectrum;
  for (double& p : spectrum.power) p /= peak;
  *it = 1.0;
  spectrum.scale *= peak;
  for (auto& pk : spectrum.peaks) pk.power /= peak;
  return spectrum;
}

std::vector<Peak> find_peaks(std::span<const double> power, std::span<const double> frequencies,
                             PeakOptions options) {
  const std::size_t n = power.size();
  std::vector<Peak> peaks;
  if (n == 0) return peaks;
  const double top = *std::max_element(power.begin(), power.end());
  if (!(top > 0.0)) return peaks;

  std::vector<std::size_t> candidates;
  if (n == 1 || power[0] > power[1]) candidates.push_back(0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (power[i] > power[i - 1] && power[i] >= power[i + 1]) {
      // plateau: keep its left edge only
      candidates.push_back(i);
    }
  }
  if (n > 1 && power[n - 1] > power[n - 2]) candidates.push_back(n - 1);

  for (std::size_t i : candidates) {
    // lowest point on each side before reaching higher ground
    double left_min = power[i];
    for (std::size_t j = i; j-- > 0;) {
      if (power[j] > power[i]) break;
      left_min = std::min(left_min, power[j]);
    }
    double right_min = power[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (power[j] > power[i]) break;
      right_min = std::min(right_min, power[j]);
    }
    double base;
    if (i == 0) {
      base = right_min;
    } else if (i == n - 1) {
      base = left_min;
    } else {
      base = std::max(left_min, right_min);
    }
    const double prominence = power[i] - base;
    if (prominence >= options.prominence * top || (candidates.size() == 1 && power[i] == top)) {
      peaks.push_back({frequencies[i], power[i], prominence, i, std::nullopt});
    }
  }

  // enforce separation, tallest first
  std::vector<std::size_t> order(peaks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return peaks[a].power > peaks[b].power; });
  std::vector<bool> keep(peaks.size(), true);
  for (std::size_t a = 0; a < order.size(); ++a) {
    if (!keep[order[a]]) continue;
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const auto d = static_cast<long>(peaks[order[a]].bin) - static_cast<long>(peaks[order[b]].bin);
      if (static_cast<std::size_t>(std::abs(d)) < options.min_separation) keep[order[b]] = false;
    }
  }
  std::vector<Peak> kept;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (keep[i]) kept.push_back(peaks[i]);
  }
  return kept;
}

SpectrumResult assign_peaks(SpectrumResult spectrum, const LineList& lines, double window_ghz) {
  for (auto& peak : spectrum.peaks) {
    peak.assignment.reset();
    double best = window_ghz;
    for (const auto& line : lines.transitions) {
      const double d = std::abs(line.frequency_ghz - peak.frequency_ghz);
      if (d <= best) {
        best = d;
        peak.assignment = line;
      }
    }
  }
  return spectrum;
}

SpectrumResult trajectory_spectrum(const Trajectory& trajectory, OrientationAxis observable,
                                   double max_frequency_ghz, PeakOptions options) {
  const auto& s = trajectory.samples;
  if (s.size() < 2) throw std::invalid_argument("trajectory_spectrum: need at least two samples");
  std::vector<double> times(s.size());
  std::vector<double> values(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    times[i] = s[i].time;
    switch (observable) {
      case OrientationAxis::z: values[i] = s[i].cos_z; break;
      case OrientationAxis::x: values[i] = s[i].cos_x; break;
      case OrientationAxis::mu: values[i] = s[i].cos_mu; break;
    }
  }
  if (times.front() > times.back()) {
    std::reverse(times.begin(), times.end());
    std::reverse(values.begin(), values.end());
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double spread = 0.0;
  for (double& v : values) {
    v -= mean;
    spread = std::max(spread, std::abs(v));
  }
  // a constant series leaves only rounding noise
  if (spread <= 1e-12 * std::max(1.0, std::abs(mean))) std::fill(values.begin(), values.end(), 0.0);
  return power_spectrum(times, values, max_frequency_ghz, options);
}

double default_assignment_window(double tau_ns) {
  if (tau_ns <= 1.0) return 0.7;
  if (tau_ns >= 5.0) return 0.2;
  return 0.7 + (tau_ns - 1.0) * (0.2 - 0.7) / 4.0;
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumResult& spectrum) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::vector<std::string> tag(spectrum.power.size());
  for (const auto& p : spectrum.peaks) tag[p.bin] = p.assignment ? p.assignment_label() : "unassigned";
  out << "frequency_ghz,power,assignment\n" << std::setprecision(12);
  for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
    out << spectrum.frequencies[k] << ',' << spectrum.power[k] << ',' << tag[k] << '\n';
  }
}

void write_spectrum_dat(const std::filesystem::path& path, const SpectrumResult& spectrum) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# frequency_ghz power\n" << std::setprecision(12);
  for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
    out << spectrum.frequencies[k] << ' ' << spectrum.power[k] << '\n';
  }
}

void write_peaks_csv(const std::filesystem::path& path, const SpectrumResult& spectrum) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frequency_ghz,power,prominence,assignment,line_ghz\n" << std::setprecision(10);
  for (const auto& p : spectrum.peaks) {
    out << p.frequency_ghz << ',' << p.power << ',' << p.prominence << ','
        << (p.assignment ? p.assignment_label() : "unassigned") << ',';
    if (p.assignment) out << p.assignment->frequency_ghz;
    out << '\n';
  }
}

}  // namespace rotoc
