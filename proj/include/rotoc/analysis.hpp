#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rotoc/dynamics.hpp"
#include "rotoc/rotor.hpp"

namespace rotoc {

struct PeakOptions {
  double prominence = 0.02;      // fraction of the global maximum
  std::size_t min_separation = 2;  // bins
};

struct Peak {
  double frequency_ghz = 0.0;
  double power = 0.0;
  double prominence = 0.0;
  std::size_t bin = 0;
  std::optional<Transition> assignment;

  std::string assignment_label() const;
};

/// One-sided |DFT|^2 spectrum, normalized to a maximum of 1. The unnormalized
/// density is power[k] * scale, with sum_k power[k] * scale * df equal to
/// sum_n x_n^2 dt over the full band.
struct SpectrumResult {
  std::vector<double> frequencies;  // GHz
  std::vector<double> power;
  std::vector<Peak> peaks;
  double df = 0.0;
  double scale = 0.0;
};

/// Raw finite-window transform (no window function, no zero padding) of a
/// uniformly sampled real series with spacing dt (ns). Bins above
/// max_frequency_ghz are dropped when it is positive; normalization and peaks
/// refer to the retained band.
SpectrumResult power_spectrum(std::span<const double> signal, double dt, double max_frequency_ghz = 0.0,
                              PeakOptions options = {});
/// As above with explicit sample times; throws std::invalid_argument unless
/// the grid is uniform.
SpectrumResult power_spectrum(std::span<const double> times, std::span<const double> signal,
                              double max_frequency_ghz = 0.0, PeakOptions options = {});

/// Local maxima of `power` (including a DC edge maximum) whose topographic
/// prominence reaches options.prominence * max(power), thinned so that kept
/// peaks are at least options.min_separation bins apart (taller wins).
std::vector<Peak> find_peaks(std::span<const double> power, std::span<const double> frequencies,
                             PeakOptions options = {});

/// Rescales so max(power) = 1; a no-op on an already normalized spectrum.
SpectrumResult normalized(SpectrumResult spectrum);

/// Tags each peak with the nearest line within `window_ghz`.
SpectrumResult assign_peaks(SpectrumResult spectrum, const LineList& lines, double window_ghz);

/// Spectrum of one orientation series of a trajectory after removing its mean.
SpectrumResult trajectory_spectrum(const Trajectory& trajectory, OrientationAxis observable,
                                   double max_frequency_ghz = 0.0, PeakOptions options = {});

/// Default assignment window: 0.2 GHz for tau >= 5 ns, 0.7 GHz for tau <= 1 ns,
/// linear in between.
double default_assignment_window(double tau_ns);

/// CSV: frequency_ghz,power,assignment (assignment only on peak bins).
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumResult& spectrum);
/// Two whitespace-separated columns: frequency_ghz power.
void write_spectrum_dat(const std::filesystem::path& path, const SpectrumResult& spectrum);
/// CSV: frequency_ghz,power,prominence,assignment,line_ghz
void write_peaks_csv(const std::filesystem::path& path, const SpectrumResult& spectrum);

}  // namespace rotoc
