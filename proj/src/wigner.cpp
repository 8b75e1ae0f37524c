#include "rotoc/wigner.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace rotoc {

namespace {

using boost::multiprecision::cpp_int;
using big_float = boost::multiprecision::cpp_bin_float_50;

std::vector<int> primes_up_to(int n) {
  std::vector<int> primes;
  std::vector<bool> composite(static_cast<std::size_t>(std::max(n, 1)) + 1, false);
  for (int p = 2; p <= n; ++p) {
    if (composite[p]) continue;
    primes.push_back(p);
    for (long q = static_cast<long>(p) * p; q <= n; q += p) composite[q] = true;
  }
  return primes;
}

// exponents[i] += sign * (exponent of primes[i] in n!)
void add_factorial(std::vector<int>& exponents, const std::vector<int>& primes, int n, int sign) {
  for (std::size_t i = 0; i < primes.size(); ++i) {
    int count = 0;
    for (long pk = primes[i]; pk <= n; pk *= primes[i]) count += static_cast<int>(n / pk);
    exponents[i] += sign * count;
  }
}

cpp_int power_product(const std::vector<int>& primes, const std::vector<int>& exponents) {
  cpp_int result = 1;
  for (std::size_t i = 0; i < primes.size(); ++i) {
    if (exponents[i] > 0) result *= boost::multiprecision::pow(cpp_int(primes[i]), exponents[i]);
  }
  return result;
}

}  // namespace

double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (j1 < 0 || j2 < 0 || j3 < 0) {
    throw std::invalid_argument("wigner3j: negative angular momentum (" + std::to_string(j1) +
                                ", " + std::to_string(j2) + ", " + std::to_string(j3) + ")");
  }
  if (m1 + m2 + m3 != 0) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;

  const int kmin = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int kmax = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  if (kmin > kmax) return 0.0;

  const auto primes = primes_up_to(j1 + j2 + j3 + 1);
  const std::size_t np = primes.size();

  // Squared prefactor: triangle coefficient times the six (j +- m)! terms.
  std::vector<int> prefactor(np, 0);
  add_factorial(prefactor, primes, j1 + j2 - j3, +1);
  add_factorial(prefactor, primes, j1 - j2 + j3, +1);
  add_factorial(prefactor, primes, -j1 + j2 + j3, +1);
  add_factorial(prefactor, primes, j1 + j2 + j3 + 1, -1);
  add_factorial(prefactor, primes, j1 + m1, +1);
  add_factorial(prefactor, primes, j1 - m1, +1);
  add_factorial(prefactor, primes, j2 + m2, +1);
  add_factorial(prefactor, primes, j2 - m2, +1);
  add_factorial(prefactor, primes, j3 + m3, +1);
  add_factorial(prefactor, primes, j3 - m3, +1);

  std::vector<std::vector<int>> terms;
  terms.reserve(static_cast<std::size_t>(kmax - kmin + 1));
  std::vector<int> common(np, 0);
  for (int k = kmin; k <= kmax; ++k) {
    std::vector<int> e(np, 0);
    add_factorial(e, primes, k, -1);
    add_factorial(e, primes, j3 - j2 + k + m1, -1);
    add_factorial(e, primes, j3 - j1 + k - m2, -1);
    add_factorial(e, primes, j1 + j2 - j3 - k, -1);
    add_factorial(e, primes, j1 - k - m1, -1);
    add_factorial(e, primes, j2 - k + m2, -1);
    if (terms.empty()) {
      common = e;
    } else {
      for (std::size_t i = 0; i < np; ++i) common[i] = std::min(common[i], e[i]);
    }
    terms.push_back(std::move(e));
  }

  cpp_int sum = 0;
  for (int k = kmin; k <= kmax; ++k) {
    auto e = terms[static_cast<std::size_t>(k - kmin)];
    for (std::size_t i = 0; i < np; ++i) e[i] -= common[i];
    const cpp_int term = power_product(primes, e);
    if (k % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }
  if (sum == 0) return 0.0;

  // value^2 = sum^2 * prod p^(2*common + prefactor)
  std::vector<int> up(np, 0);
  std::vector<int> down(np, 0);
  for (std::size_t i = 0; i < np; ++i) {
    const int e = 2 * common[i] + prefactor[i];
    (e > 0 ? up[i] : down[i]) = std::abs(e);
  }
  const cpp_int numerator = sum * sum * power_product(primes, up);
  const cpp_int denominator = power_product(primes, down);
  big_float magnitude = sqrt(big_float(numerator) / big_float(denominator));

  int sign = sum > 0 ? 1 : -1;
  if (std::abs(j1 - j2 - m3) % 2 == 1) sign = -sign;
  return sign * magnitude.convert_to<double>();
}

}  // namespace rotoc
