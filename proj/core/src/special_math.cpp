#include "ehstore/special_math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ehstore {

namespace detail {

long double powi(long double base, unsigned exponent) {
  long double result = 1.0L;
  long double b = base;
  unsigned n = exponent;
  while (n > 0) {
    if (n & 1u) result *= b;
    b *= b;
    n >>= 1;
  }
  return result;
}

long double upper_incomplete_gamma_int_ld(int order, long double x) {
  if (order < 1) throw std::domain_error("upper_incomplete_gamma_int: order must be >= 1");
  const int n = order - 1;
  // sum_{k=0..n} x^k / k!
  KahanLd sum;
  long double term = 1.0L;
  sum.add(term);
  for (int k = 1; k <= n; ++k) {
    term *= x / k;
    sum.add(term);
  }
  long double fact = 1.0L;
  for (int k = 2; k <= n; ++k) fact *= k;
  return fact * std::exp(-x) * sum.sum;
}

long double r_series_ld(long double y, int l, long double delta) {
  const long double z = delta * std::exp(-delta);
  KahanLd sum;
  long double zq = 1.0L;  // z^q / q!
  for (int q = 0; q <= l; ++q) {
    if (q > 0) zq *= z / q;
    sum.add(powi(y + q, static_cast<unsigned>(q)) * zq);
  }
  return sum.sum;
}

}  // namespace detail

namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e
constexpr double kBranchSlack = 1e-12;

// Expansion of W about the branch point z = -1/e in powers of
// q = +-sqrt(2 (1 + e z)); the sign of q selects the branch.
double branch_point_series(double q) {
  return -1.0 + q * (1.0 + q * (-1.0 / 3.0 + q * (11.0 / 72.0 + q * (-43.0 / 540.0 + q * (769.0 / 17280.0)))));
}

double halley(double w, double z) {
  const double tol = 1e-14 * std::fmax(1.0, std::fabs(z));
  for (int iter = 0; iter < 50; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    if (std::fabs(f) <= tol) return w;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::fabs(step) <= 1e-17 * std::fmax(1.0, std::fabs(w))) return w;
  }
  return w;
}

}  // namespace

double lambert_w(WBranch branch, double z) {
  if (std::isnan(z)) throw std::domain_error("lambert_w: z is NaN");
  if (z < -kInvE - kBranchSlack)
    throw std::domain_error("lambert_w: z below the branch point -1/e");
  if (branch == WBranch::lower && z >= 0.0)
    throw std::domain_error("lambert_w: lower branch requires z < 0");

  const double zc = std::fmax(z, -kInvE);
  double one_plus_ez = 1.0 + std::exp(1.0) * zc;
  if (one_plus_ez < 0.0) one_plus_ez = 0.0;

  // Halley loses accuracy where W'(z) diverges; switch to the series there.
  if (one_plus_ez < 1e-6) {
    const double q = std::sqrt(2.0 * one_plus_ez);
    return branch_point_series(branch == WBranch::principal ? q : -q);
  }

  double w0;
  if (branch == WBranch::principal) {
    if (zc < -0.25) {
      const double q = std::sqrt(2.0 * one_plus_ez);
      w0 = branch_point_series(q);
    } else if (zc <= std::exp(1.0)) {
      w0 = (std::fabs(zc) < 0.5) ? zc * (1.0 - zc) : std::log1p(zc);
    } else {
      const double l1 = std::log(zc);
      const double l2 = std::log(l1);
      w0 = l1 - l2 + l2 / l1;
    }
  } else {
    if (zc < -0.25) {
      const double q = std::sqrt(2.0 * one_plus_ez);
      w0 = branch_point_series(-q);
    } else {
      const double l1 = std::log(-zc);
      w0 = l1 - std::log(-l1);
    }
  }

  double w = halley(w0, zc);
  // Keep the result on its branch; roundoff may land a hair on the wrong side.
  if (branch == WBranch::principal && w < -1.0) w = -1.0;
  if (branch == WBranch::lower && w > -1.0) w = -1.0;

  const double residual = std::fabs(w * std::exp(w) - zc);
  if (residual > 1e-13 * std::fmax(1.0, std::fabs(zc)))
    throw std::runtime_error("lambert_w: iteration failed to converge");
  return w;
}

double upper_incomplete_gamma_int(int order, double x) {
  const long double v = detail::upper_incomplete_gamma_int_ld(order, x);
  const double out = static_cast<double>(v);
  if (!std::isfinite(out))
    throw std::overflow_error("upper_incomplete_gamma_int: result exceeds double range (order " +
                              std::to_string(order) + ", x " + std::to_string(x) + ")");
  return out;
}

double gaussian_q(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

double r_series(double y, int l, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("r_series: delta must be > 0");
  if (l < 0) throw std::domain_error("r_series: l must be >= 0");

  const long double z = static_cast<long double>(delta) * std::exp(-static_cast<long double>(delta));
  const long double log_z = std::log(z);

  // Per-term magnitude guard: if any term can exceed 1e300, accumulate in
  // log-magnitude + sign form instead of directly.
  bool huge = false;
  {
    long double log_fact = 0.0L;
    for (int q = 0; q <= l; ++q) {
      if (q > 0) log_fact += std::log(static_cast<long double>(q));
      const long double base = std::fabs(static_cast<long double>(y) + q);
      const long double log_term = (q > 0 && base > 0.0L ? q * std::log(base) : 0.0L) + q * log_z - log_fact;
      if (log_term > 690.0L) {  // ln(1e300)
        huge = true;
        break;
      }
    }
  }

  if (!huge) {
    return static_cast<double>(detail::r_series_ld(y, l, delta));
  }

  // log-domain accumulation: factor out the largest magnitude
  long double log_max = -std::numeric_limits<long double>::infinity();
  long double log_fact = 0.0L;
  for (int q = 0; q <= l; ++q) {
    if (q > 0) log_fact += std::log(static_cast<long double>(q));
    const long double base = std::fabs(static_cast<long double>(y) + q);
    if (q > 0 && base == 0.0L) continue;  // exact zero term
    const long double log_term = (q > 0 ? q * std::log(base) : 0.0L) + q * log_z - log_fact;
    log_max = std::fmax(log_max, log_term);
  }
  detail::KahanLd scaled;
  log_fact = 0.0L;
  for (int q = 0; q <= l; ++q) {
    if (q > 0) log_fact += std::log(static_cast<long double>(q));
    const long double yq = static_cast<long double>(y) + q;
    if (q > 0 && yq == 0.0L) continue;
    const long double base = std::fabs(yq);
    const long double log_term = (q > 0 ? q * std::log(base) : 0.0L) + q * log_z - log_fact;
    const long double sign = (yq < 0.0L && (q % 2 == 1)) ? -1.0L : 1.0L;
    scaled.add(sign * std::exp(log_term - log_max));
  }
  const long double result = std::exp(log_max + std::log(std::fabs(scaled.sum))) *
                             (scaled.sum < 0.0L ? -1.0L : 1.0L);
  return static_cast<double>(result);
}

}  // namespace ehstore
