#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a plain serial twin with
// the same signature; tests compare the two and bench/ times them.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rotoc {

using cplx = std::complex<double>;

/// Compressed sparse row storage of a real matrix.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nonzeros() const { return values.size(); }
};

namespace kernels {

// Row counts below this run the OpenMP kernels with a single thread.
inline constexpr std::size_t kParallelRows = 2048;
inline constexpr std::size_t kParallelBins = 64;

// y = a*x + scale*(b*x). a and b must have the same shape; y must not alias x.
void csr_apply_pair(const CsrMatrix& a, const CsrMatrix& b, double scale,
                    std::span<const cplx> x, std::span<cplx> y);
void csr_apply_pair_serial(const CsrMatrix& a, const CsrMatrix& b, double scale,
                           std::span<const cplx> x, std::span<cplx> y);

// <u| m |v>
cplx csr_sandwich(const CsrMatrix& m, std::span<const cplx> u, std::span<const cplx> v);
cplx csr_sandwich_serial(const CsrMatrix& m, std::span<const cplx> u,
                         std::span<const cplx> v);

// |X_k|^2 of the unnormalized DFT X_k = sum_n x_n exp(-2 pi i k n / N), k < bins.
std::vector<double> dft_power(std::span<const double> signal, std::size_t bins);
std::vector<double> dft_power_serial(std::span<const double> signal, std::size_t bins);

}  // namespace kernels
}  // namespace rotoc
