#pragma once

namespace rotoc {

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) for integer arguments.
///
/// Evaluated from the Racah sum in exact integer arithmetic: every factorial
/// is kept as a prime factorization, the alternating sum is formed over a
/// common denominator with big integers, and the square root is taken only
/// at the very end. Returns exactly 0 when a selection rule fails (triangle,
/// |m| <= j, m1 + m2 + m3 = 0). Throws std::invalid_argument for negative j.
double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3);

}  // namespace rotoc
