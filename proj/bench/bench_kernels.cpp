// Wall-clock comparison of the OpenMP kernels against their serial twins on
// the operators the propagator actually uses.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "rotoc/kernels.hpp"
#include "rotoc/rotor.hpp"

using namespace rotoc;

namespace {

// Best of `repeats` timings of `reps` calls, seconds per call.
double time_call(const std::function<void()>& f, int reps, int repeats = 5) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps);
  }
  return best;
}

void row(const char* name, std::size_t size, double serial, double parallel) {
  std::printf("%-16s %8zu %12.3e %12.3e %8.2f\n", name, size, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark: OpenMP vs serial"};
  std::vector<int> jmax{20, 45, 70};
  std::vector<std::size_t> samples{2048, 8192, 32768};
  int reps = 20;
  app.add_option("--jmax", jmax, "basis cutoffs for the operator kernels");
  app.add_option("--samples", samples, "signal lengths for the DFT kernel");
  app.add_option("--reps", reps, "calls per timing");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-16s %8s %12s %12s %8s\n", "kernel", "size", "serial_s", "openmp_s", "speedup");
  std::mt19937_64 g(1);
  std::normal_distribution<double> n(0.0, 1.0);

  for (int j : jmax) {
    const RotorSystem sys(MoleculeSpec::cpc(), j, 0);
    const auto& h0 = sys.rotational().csr();
    const auto& v = sys.coupling().csr();
    std::vector<cplx> x(sys.size()), y(sys.size());
    for (auto& c : x) c = {n(g), n(g)};
    row("csr_apply_pair", sys.size(),
        time_call([&] { kernels::csr_apply_pair_serial(h0, v, 0.7, x, y); }, reps),
        time_call([&] { kernels::csr_apply_pair(h0, v, 0.7, x, y); }, reps));
    volatile double sink = 0.0;
    row("csr_sandwich", sys.size(),
        time_call([&] { sink = sink + kernels::csr_sandwich_serial(v, x, y).real(); }, reps),
        time_call([&] { sink = sink + kernels::csr_sandwich(v, x, y).real(); }, reps));
  }

  for (std::size_t len : samples) {
    std::vector<double> s(len);
    for (auto& e : s) e = n(g);
    const std::size_t bins = std::min<std::size_t>(len / 2 + 1, 4096);
    const int r = std::max(1, reps / 10);
    row("dft_power", len, time_call([&] { (void)kernels::dft_power_serial(s, bins); }, r, 3),
        time_call([&] { (void)kernels::dft_power(s, bins); }, r, 3));
  }
  return 0;
}
