#include "rotoc/kernels.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

#include <omp.h>

namespace rotoc::kernels {

namespace {

std::vector<cplx> twiddles(std::size_t n) {
  std::vector<cplx> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    w[j] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

inline double bin_power(std::span<const double> signal, const std::vector<cplx>& w,
                        std::size_t k) {
  const std::size_t n = signal.size();
  cplx acc{0.0, 0.0};
  std::size_t phase = 0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += signal[j] * w[phase];
    phase += k;
    if (phase >= n) phase %= n;
  }
  return std::norm(acc);
}

}  // namespace

void csr_apply_pair(const CsrMatrix& a, const CsrMatrix& b, double scale,
                    std::span<const cplx> x, std::span<cplx> y) {
  assert(a.rows == b.rows && x.size() == a.cols && y.size() == a.rows);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows >= kParallelRows)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    cplx sa{0.0, 0.0};
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) sa += a.values[p] * x[a.col_idx[p]];
    cplx sb{0.0, 0.0};
    for (std::size_t p = b.row_ptr[i]; p < b.row_ptr[i + 1]; ++p) sb += b.values[p] * x[b.col_idx[p]];
    y[i] = sa + scale * sb;
  }
}

void csr_apply_pair_serial(const CsrMatrix& a, const CsrMatrix& b, double scale,
                           std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    cplx sa{0.0, 0.0};
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) sa += a.values[p] * x[a.col_idx[p]];
    cplx sb{0.0, 0.0};
    for (std::size_t p = b.row_ptr[i]; p < b.row_ptr[i + 1]; ++p) sb += b.values[p] * x[b.col_idx[p]];
    y[i] = sa + scale * sb;
  }
}

cplx csr_sandwich(const CsrMatrix& m, std::span<const cplx> u, std::span<const cplx> v) {
  assert(u.size() == m.rows && v.size() == m.cols);
  const auto rows = static_cast<std::ptrdiff_t>(m.rows);
  double re = 0.0;
  double im = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : re, im) if (m.rows >= kParallelRows)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    cplx s{0.0, 0.0};
    for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) s += m.values[p] * v[m.col_idx[p]];
    const cplx t = std::conj(u[i]) * s;
    re += t.real();
    im += t.imag();
  }
  return {re, im};
}

cplx csr_sandwich_serial(const CsrMatrix& m, std::span<const cplx> u,
                         std::span<const cplx> v) {
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < m.rows; ++i) {
    cplx s{0.0, 0.0};
    for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) s += m.values[p] * v[m.col_idx[p]];
    acc += std::conj(u[i]) * s;
  }
  return acc;
}

std::vector<double> dft_power(std::span<const double> signal, std::size_t bins) {
  const auto w = twiddles(signal.size());
  std::vector<double> power(bins);
  const auto nbins = static_cast<std::ptrdiff_t>(bins);
#pragma omp parallel for schedule(dynamic, 16) if (bins >= kParallelBins)
  for (std::ptrdiff_t k = 0; k < nbins; ++k) power[k] = bin_power(signal, w, static_cast<std::size_t>(k));
  return power;
}

std::vector<double> dft_power_serial(std::span<const double> signal, std::size_t bins) {
  const auto w = twiddles(signal.size());
  std::vector<double> power(bins);
  for (std::size_t k = 0; k < bins; ++k) power[k] = bin_power(signal, w, k);
  return power;
}

}  // namespace rotoc::kernels
