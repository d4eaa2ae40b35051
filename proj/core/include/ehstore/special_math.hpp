#pragma once

namespace ehstore {

/// Branch selector for the real Lambert W function. Only the two real
/// branches exist: W_0 (principal, w >= -1) and W_{-1} (lower, w <= -1).
enum class WBranch { principal, lower };

/// Real Lambert W: returns w with w*exp(w) == z.
///
/// principal: z >= -1/e, result in [-1, inf).
/// lower:     -1/e <= z < 0, result in (-inf, -1].
/// The relative residual |w e^w - z| / max(1, |z|) is at most 1e-13.
/// Throws std::domain_error outside the branch domain (a 1e-12 absolute
/// slack below -1/e is tolerated and clamped to the branch point).
double lambert_w(WBranch branch, double z);

/// Upper incomplete gamma Gamma(s, x) for integer order s >= 1 and any
/// real x (including x < 0), via the exact finite sum
///   Gamma(n+1, x) = n! e^{-x} sum_{k=0..n} x^k / k!.
/// Throws std::overflow_error if the value exceeds the double range and
/// std::domain_error for s < 1.
double upper_incomplete_gamma_int(int order, double x);

/// Gaussian Q-function Q(x) = P(N(0,1) > x) = erfc(x/sqrt(2)) / 2.
double gaussian_q(double x);

/// Finite series R(y, l) = sum_{q=0..l} (y+q)^q (delta e^{-delta})^q / q!
/// with the 0^0 = 1 empty-product convention. Terms whose magnitude may
/// exceed 1e300 are accumulated in log-magnitude + sign form.
/// Requires delta > 0 and l >= 0.
double r_series(double y, int l, double delta);

namespace detail {

// Extended-precision variants used by the distribution closed forms,
// where the alternating sums cancel by many decimal digits.
long double upper_incomplete_gamma_int_ld(int order, long double x);
long double r_series_ld(long double y, int l, long double delta);

// Integer power with powi(x, 0) == 1 for every x (including 0).
long double powi(long double base, unsigned exponent);

// Compensated (Kahan) accumulator.
struct KahanLd {
  long double sum = 0.0L;
  long double carry = 0.0L;
  void add(long double v) {
    const long double y = v - carry;
    const long double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

}  // namespace ehstore
