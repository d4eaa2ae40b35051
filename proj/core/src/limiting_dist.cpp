#include "ehstore/limiting_dist.hpp"

#include <cmath>
#include <string>

#include "ehstore/quadrature.hpp"
#include "ehstore/special_math.hpp"

namespace ehstore {

namespace {

using detail::KahanLd;
using detail::powi;

constexpr double kDeltaOneWindow = 1e-9;

// Digits-of-precision guard for the big alternating sums. long double
// carries ~18.9 decimal digits; the estimate below is conservative (it sums
// the magnitudes that entered, not the roundoff that survived), so the
// refusal point is set where measured results actually degrade.
constexpr long double kWorkingDigits = 18.9L;
constexpr long double kMinRemainingDigits = 3.4L;

void guard_cancellation(long double abs_scale, long double result,
                        const char* where) {
  if (result == 0.0L) return;
  const long double lost = std::log10(abs_scale / std::fabs(result));
  if (lost > kWorkingDigits - kMinRemainingDigits)
    throw NumericInstabilityError(
        std::string(where) +
        ": cancellation leaves too few significant digits at this size");
}

// Section-mass factor T_n: the integral of section n divided by the atom,
//   T_n = e^{n delta} sum_{q=0..n} (delta e^{-delta})^q / q! *
//         (e^{delta} (q-n-1)^q - (q-n)^q).
// Depends on delta and n only. abs_out accumulates the magnitude that
// entered the sum (for the cancellation estimate).
long double section_mass_factor(long double delta, int n, long double& abs_out) {
  const long double z = delta * std::exp(-delta);
  const long double ed = std::exp(delta);
  KahanLd inner;
  long double inner_abs = 0.0L;
  long double zq = 1.0L;  // z^q / q!
  for (int q = 0; q <= n; ++q) {
    if (q > 0) zq *= z / q;
    const long double term =
        zq * (ed * powi(static_cast<long double>(q - (n + 1)), q) -
              powi(static_cast<long double>(q - n), q));
    inner.add(term);
    inner_abs += std::fabs(term);
  }
  const long double scale = std::exp(static_cast<long double>(n) * delta);
  abs_out = scale * inner_abs;
  return scale * inner.sum;
}

// Bottom-piece mass factor S2 = (integral of g over [0,M)) / atom:
//   S2 = e^{delta(l-1)} sum_{q=0..l-2} e^{-delta q}/q! *
//        [ e^{a_q} (Gamma(q+1, a_q + delta) - Gamma(q+1, a_q)) + delta a_q^q ]
// with a_q = delta (q+1-l).
long double lower_mass_factor(long double delta, int l, long double& abs_out) {
  KahanLd sum;
  long double sum_abs = 0.0L;
  long double pref = 1.0L;  // e^{-delta q} / q!
  const long double ed = std::exp(-delta);
  for (int q = 0; q <= l - 2; ++q) {
    if (q > 0) pref *= ed / q;
    const long double a0 = delta * (q + 1 - l);
    const long double g0 = detail::upper_incomplete_gamma_int_ld(q + 1, a0);
    const long double g1 = detail::upper_incomplete_gamma_int_ld(q + 1, a0 + delta);
    const long double term = pref * (std::exp(a0) * (g1 - g0) + delta * powi(a0, q));
    sum.add(term);
    sum_abs += pref * (std::exp(a0) * (std::fabs(g1) + std::fabs(g0)) +
                       delta * std::fabs(powi(a0, q)));
  }
  const long double scale = std::exp(delta * (l - 1));
  abs_out = scale * sum_abs;
  return scale * sum.sum;
}

// Partial integral helper for a top section: the antiderivative of the
// section bracket collapses to
//   H_n(t) = e^{-t} (1 + sum_{q=1..n} e^{-delta q}/q! (delta q + t)^q),
// with integral over [x1, x2] equal to atom * (H_n(t1) - H_n(t2)).
long double section_antiderivative(long double delta, int n, long double t) {
  KahanLd s;
  s.add(1.0L);
  long double coeff = 1.0L;  // e^{-delta q} / q!
  const long double ed = std::exp(-delta);
  for (int q = 1; q <= n; ++q) {
    coeff *= ed / q;
    s.add(coeff * powi(delta * q + t, q));
  }
  return std::exp(-t) * s.sum;
}

double root_of_rate_equation(double delta, double m_eff, WBranch branch) {
  const double w = lambert_w(branch, -delta * std::exp(-delta));
  return (-delta - w) / m_eff;
}

// Sigma_1 = e^{delta l} [R(-l, l-1) - e^{-delta} R(1-l, l-2)] with
// R(y, n) = sum_{q=0..n} (y+q)^q (delta e^{-delta})^q / q!.
//
// The direct sum cancels catastrophically for large l, so away from
// delta = 1 it is replaced by the exact representation through the full
// series R(y, inf) = e^{-y W_0} / (1 + W_0):
//   Sigma_1 = e^{l (delta + W_0)} (1 - e^{-(delta+W_0)}) / (1 + W_0)
//           - e^{delta l} sum_{q>=l} [(q-l)^q - e^{-delta}(q-l+1)^q] z^q/q!
// where W_0 = W_0(-delta e^{-delta}). For delta < 1, W_0 = -delta exactly
// and the first term vanishes, leaving a sum of positive terms. The series
// tail converges at rate delta e^{1-delta}, which is useless near
// delta = 1; there the direct sum is stable for moderate l.

long double sigma1_direct_ld(long double delta, int l, long double& lost) {
  const long double lam_k = delta * l;
  KahanLd s;
  s.add(1.0L);
  long double s_abs = 1.0L;
  long double coeff = 1.0L;
  const long double ed = std::exp(-delta);
  for (int q = 1; q <= l - 1; ++q) {
    coeff *= (q == 1) ? ed : ed / (q - 1);
    const long double term =
        coeff * powi(delta * q - lam_k, q - 1) * (-lam_k / q + delta - 1.0L);
    s.add(term);
    s_abs += std::fabs(term);
  }
  lost = s.sum == 0.0L ? kWorkingDigits : std::log10(s_abs / std::fabs(s.sum));
  return std::exp(lam_k) * s.sum;
}

long double sigma1_series_ld(long double delta, int l) {
  const long double z = delta * std::exp(-delta);
  const long double log_z = std::log(z);

  long double main = 0.0L;
  if (delta > 1.0L) {
    const long double w0 = lambert_w(WBranch::principal,
                                     static_cast<double>(-z));
    const long double a = delta + w0;  // > 0 here
    main = std::exp(static_cast<long double>(l) * a) * (-std::expm1(-a)) /
           (1.0L + w0);
  }

  // scan the tail for its peak log-magnitude, then accumulate rescaled
  constexpr int kMaxTerms = 200000;
  const long double offset = delta * l;
  auto log_mag = [&](int q) {
    return offset + q * std::log(static_cast<long double>(q - l + 1)) +
           q * log_z - std::lgamma(static_cast<long double>(q + 1));
  };
  long double peak = log_mag(l);
  int q_end = l;
  for (int q = l + 1; q < l + kMaxTerms; ++q) {
    const long double m = log_mag(q);
    if (m > peak) peak = m;
    if (m < peak - 45.0L) {
      q_end = q;
      break;
    }
    q_end = q;
  }
  if (q_end == l + kMaxTerms - 1)
    throw NumericInstabilityError(
        "finite_approx: series for the mid-section coefficient did not "
        "converge");
  KahanLd scaled;
  scaled.add(std::exp(-delta + offset + l * log_z -
                      std::lgamma(static_cast<long double>(l + 1)) - peak));
  for (int q = l + 1; q <= q_end; ++q) {
    const long double base = offset + q * std::log(static_cast<long double>(q - l)) +
                             q * log_z -
                             std::lgamma(static_cast<long double>(q + 1));
    // e^{-delta}(q-l+1)^q - (q-l)^q, factored around (q-l)^q
    const long double bracket =
        std::expm1(-delta + q * std::log1p(1.0L / (q - l)));
    scaled.add(bracket * std::exp(base - peak));
  }
  return main + std::exp(peak) * scaled.sum;
}

long double sigma1_ld(long double delta, int l) {
  long double lost = 0.0L;
  const long double direct = sigma1_direct_ld(delta, l, lost);
  if (kWorkingDigits - lost >= 7.5L) return direct;
  if (std::fabs(delta - 1.0L) >= 0.05L) return sigma1_series_ld(delta, l);
  throw NumericInstabilityError(
      "finite_approx: cancellation leaves too few significant digits at this "
      "size");
}

}  // namespace

// ---------------------------------------------------------------------------
// InfiniteBufferDist

InfiniteBufferDist infinite_pdf(const EffectiveParams& eff) {
  if (!(eff.delta > 1.0))
    throw std::domain_error(
        "infinite_pdf: no stationary distribution exists for delta <= 1 on an "
        "unbounded buffer");
  InfiniteBufferDist d;
  d.m_eff_ = eff.m_eff;
  d.rate_ = eff.harvest_rate_eff;
  d.delta_ = eff.delta;
  d.p_ = root_of_rate_equation(eff.delta, eff.m_eff, WBranch::principal);
  d.tail_coeff_ = -d.p_ / (d.delta_ * std::exp(d.p_ * d.m_eff_));
  const double residual =
      std::fabs(d.rate_ * std::exp(d.p_ * d.m_eff_) - (d.rate_ + d.p_));
  if (!(d.p_ < 0.0) || residual > 1e-12 * d.rate_)
    throw std::runtime_error("infinite_pdf: root of the rate equation failed");
  return d;
}

InfiniteBufferDist InfiniteBufferDist::from_state(double m_eff, double rate,
                                                  double p) {
  InfiniteBufferDist d;
  d.m_eff_ = m_eff;
  d.rate_ = rate;
  d.delta_ = rate * m_eff;
  d.p_ = p;
  d.tail_coeff_ = -p / (d.delta_ * std::exp(p * m_eff));
  return d;
}

double InfiniteBufferDist::pdf(double x) const {
  if (x < 0.0) throw std::domain_error("pdf: x outside support [0, inf)");
  if (x <= m_eff_) return (1.0 - std::exp(p_ * x)) / m_eff_;
  return tail_coeff_ * std::exp(p_ * x);
}

double InfiniteBufferDist::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x <= m_eff_)
    return x / m_eff_ - std::expm1(p_ * x) / (p_ * m_eff_);
  const double at_m = 1.0 - 1.0 / delta_;
  return at_m + tail_coeff_ * (std::exp(p_ * x) - std::exp(p_ * m_eff_)) / p_;
}

// ---------------------------------------------------------------------------
// FiniteExactDist

FiniteExactDist finite_exact(const EffectiveParams& eff, const BufferSpec& buf) {
  if (!buf.is_finite())
    throw std::domain_error("finite_exact: buffer must be finite");
  FiniteExactDist d;
  d.build(eff.m_eff, eff.harvest_rate_eff, buf.sections(), 0.0, false);
  return d;
}

FiniteExactDist FiniteExactDist::from_state(double m_eff, double rate,
                                            int sections, double atom) {
  FiniteExactDist d;
  d.build(m_eff, rate, sections, atom, true);
  return d;
}

void FiniteExactDist::build(double m_eff, double rate, int sections,
                            double atom_override, bool has_override) {
  if (sections < 2)
    throw std::domain_error("finite_exact: at least 2 sections are required");
  m_eff_ = m_eff;
  rate_ = rate;
  delta_ = rate * m_eff;
  l_ = sections;
  capacity_ = sections * m_eff;

  const long double delta = static_cast<long double>(rate) * m_eff;
  KahanLd denom;
  denom.add(1.0L);
  long double denom_abs = 1.0L;
  std::vector<long double> t_factors(l_ - 1);
  for (int n = 0; n <= l_ - 2; ++n) {
    long double abs_n = 0.0L;
    t_factors[n] = section_mass_factor(delta, n, abs_n);
    denom.add(t_factors[n]);
    denom_abs += abs_n;
  }
  long double abs_s2 = 0.0L;
  const long double s2 = lower_mass_factor(delta, l_, abs_s2);
  denom.add(s2);
  denom_abs += abs_s2;
  guard_cancellation(denom_abs, denom.sum, "finite_exact");

  const long double atom = 1.0L / denom.sum;
  atom_ = has_override ? atom_override : static_cast<double>(atom);
  if (!(atom_ > 0.0 && atom_ < 1.0))
    throw std::runtime_error("finite_exact: atom outside (0,1)");
  s2_ = static_cast<double>(s2);

  section_masses_.resize(l_ - 1);
  for (int n = 0; n <= l_ - 2; ++n)
    section_masses_[n] = static_cast<double>(atom_ * t_factors[n]);

  // cdf at the left edge of each top section, accumulated upward from M
  cum_left_.resize(l_ - 1);
  double cum = atom_ * s2_;  // mass of [0, M)
  for (int n = l_ - 2; n >= 0; --n) {
    cum_left_[n] = cum;
    cum += section_masses_[n];
  }

  // ascending section edges 0, K-(l-1)M, ..., K-M, K; the stored values are
  // the single source of truth for section membership
  edges_.resize(l_ + 1);
  edges_[0] = 0.0;
  for (int j = 1; j <= l_; ++j) edges_[j] = capacity_ - (l_ - j) * m_eff_;
}

int FiniteExactDist::section_of(double x) const {
  // section n spans [edges_[l-1-n], edges_[l-n])
  const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, x);
  const int j = static_cast<int>(it - edges_.begin()) - 1;  // x in [e_j, e_{j+1})
  return l_ - 1 - j;
}

double FiniteExactDist::g_lower(double x) const {
  const long double delta = static_cast<long double>(delta_);
  const long double z = delta * std::exp(-delta);
  const long double lam_x = static_cast<long double>(rate_) * x;
  const long double em = std::exp(-lam_x);
  const long double xi = static_cast<long double>(x) / m_eff_;
  KahanLd sum;
  long double zq = 1.0L;
  for (int q = 0; q <= l_ - 2; ++q) {
    if (q > 0) zq *= z / q;
    const long double base = static_cast<long double>(q + 1 - l_);
    sum.add(zq * (powi(base, q) - em * powi(base + xi, q)));
  }
  const long double v = static_cast<long double>(atom_) * rate_ *
                        std::exp(delta * (l_ - 1)) * sum.sum;
  return static_cast<double>(v);
}

double FiniteExactDist::g_section(double x, int n) const {
  const long double delta = static_cast<long double>(delta_);
  const long double t = static_cast<long double>(rate_) * (x - capacity_);
  KahanLd s;
  s.add(1.0L);
  long double coeff = 1.0L;  // e^{-delta q} / (q-1)!
  const long double ed = std::exp(-delta);
  for (int q = 1; q <= n; ++q) {
    coeff *= (q == 1) ? ed : ed / (q - 1);
    s.add(coeff * powi(delta * q + t, q - 1) * (t / q + delta - 1.0L));
  }
  const long double v =
      static_cast<long double>(atom_) * rate_ * std::exp(-t) * s.sum;
  return static_cast<double>(v);
}

double FiniteExactDist::pdf(double x) const {
  if (x < 0.0 || x > capacity_)
    throw std::domain_error("pdf: x outside support [0, K)");
  if (x == capacity_)
    throw std::domain_error("pdf: the mass at K is an atom, not a density");
  const int n = section_of(x);
  if (n == l_ - 1) return g_lower(x);
  return g_section(x, n);
}

double FiniteExactDist::partial_lower(double x) const {
  // integral over [0, x] of the bottom piece, x <= M:
  //   atom e^{delta(l-1)} sum_q e^{-delta q}/q! *
  //     [ rate x a_q^q + e^{a_q} (Gamma(q+1, a_q + rate x) - Gamma(q+1, a_q)) ]
  const long double delta = static_cast<long double>(delta_);
  const long double lam_x = static_cast<long double>(rate_) * x;
  KahanLd sum;
  long double pref = 1.0L;
  const long double ed = std::exp(-delta);
  for (int q = 0; q <= l_ - 2; ++q) {
    if (q > 0) pref *= ed / q;
    const long double a0 = delta * (q + 1 - l_);
    const long double g0 = detail::upper_incomplete_gamma_int_ld(q + 1, a0);
    const long double g1 = detail::upper_incomplete_gamma_int_ld(q + 1, a0 + lam_x);
    sum.add(pref * (lam_x * powi(a0, q) + std::exp(a0) * (g1 - g0)));
  }
  const long double v =
      static_cast<long double>(atom_) * std::exp(delta * (l_ - 1)) * sum.sum;
  return static_cast<double>(v);
}

double FiniteExactDist::partial_section(int n, double lo, double x) const {
  const long double delta = static_cast<long double>(delta_);
  const long double t1 = static_cast<long double>(rate_) * (lo - capacity_);
  const long double t2 = static_cast<long double>(rate_) * (x - capacity_);
  const long double v = static_cast<long double>(atom_) *
                        (section_antiderivative(delta, n, t1) -
                         section_antiderivative(delta, n, t2));
  return static_cast<double>(v);
}

double FiniteExactDist::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= capacity_) return 1.0;
  const int n = section_of(x);
  if (n == l_ - 1) return partial_lower(x);
  return cum_left_[n] + partial_section(n, edges_[l_ - 1 - n], x);
}

double FiniteExactDist::lower_mass() const { return atom_ * s2_; }

double FiniteExactDist::section_mass(int n) const {
  if (n < 0 || n > l_ - 2)
    throw std::domain_error("section_mass: section index out of range");
  return section_masses_[n];
}

FiniteExactDist FiniteExactDist::perturbed_atom(double rel_change) const {
  FiniteExactDist d;
  d.build(m_eff_, rate_, l_, atom_ * (1.0 + rel_change), true);
  return d;
}

// ---------------------------------------------------------------------------
// FiniteApproxDist

FiniteApproxDist finite_approx(const EffectiveParams& eff, const BufferSpec& buf,
                               int n_c) {
  if (!buf.is_finite())
    throw std::domain_error("finite_approx: buffer must be finite");
  FiniteApproxDist d;
  d.build(eff.m_eff, eff.harvest_rate_eff, buf.sections(), n_c, 0.0, false);
  return d;
}

FiniteApproxDist FiniteApproxDist::from_state(double m_eff, double rate,
                                              int sections, int tail_sections,
                                              double atom) {
  FiniteApproxDist d;
  d.build(m_eff, rate, sections, tail_sections, atom, true);
  return d;
}

void FiniteApproxDist::build(double m_eff, double rate, int sections, int n_c,
                             double atom_override, bool has_override) {
  if (sections < 3)
    throw std::domain_error(
        "finite_approx: the approximation needs at least 3 sections");
  if (n_c < 2 || n_c > sections - 1)
    throw std::domain_error("finite_approx: need 2 <= n_c <= sections - 1");
  m_eff_ = m_eff;
  rate_ = rate;
  delta_ = rate * m_eff;
  l_ = sections;
  n_c_ = n_c;
  capacity_ = sections * m_eff;

  delta_one_ = std::fabs(delta_ - 1.0) < kDeltaOneWindow;
  d_ = delta_one_ ? 0.0
                  : root_of_rate_equation(
                        delta_, m_eff_,
                        delta_ <= 1.0 ? WBranch::lower : WBranch::principal);

  const long double delta = static_cast<long double>(delta_);
  const long double lam = static_cast<long double>(rate);
  sigma1_ = static_cast<double>(sigma1_ld(delta, l_));

  if (delta_one_) {
    sigma2_ = static_cast<double>(lam) * sigma1_ *
              (m_eff_ / 2.0 + capacity_ - (n_c_ + 1) * m_eff_);
  } else {
    sigma2_ = static_cast<double>(lam) * sigma1_ / d_ *
              (std::exp(d_ * (capacity_ - n_c_ * m_eff_)) -
               delta_ * std::exp(d_ * m_eff_));
  }

  KahanLd denom;
  denom.add(1.0L);
  denom.add(sigma2_);
  std::vector<long double> t_factors(n_c_);
  for (int n = 0; n < n_c_; ++n) {
    long double abs_n = 0.0L;
    t_factors[n] = section_mass_factor(delta, n, abs_n);
    denom.add(t_factors[n]);
  }
  atom_ = has_override ? atom_override : static_cast<double>(1.0L / denom.sum);
  if (!(atom_ > 0.0 && atom_ < 1.0))
    throw std::runtime_error("finite_approx: atom outside (0,1)");
  c_ = atom_ * static_cast<double>(lam) * sigma1_;

  if (delta_one_) {
    lower_mass_ = c_ * m_eff_ * m_eff_ * rate_ / 2.0;
    mid_mass_ = c_ * (capacity_ - n_c_ * m_eff_ - m_eff_);
  } else {
    lower_mass_ = c_ * std::exp(d_ * m_eff_) * (1.0 - delta_) / d_;
    mid_mass_ =
        c_ * (std::exp(d_ * (capacity_ - n_c_ * m_eff_)) - std::exp(d_ * m_eff_)) / d_;
  }
  section_masses_.resize(n_c_);
  for (int n = 0; n < n_c_; ++n)
    section_masses_[n] = static_cast<double>(atom_ * t_factors[n]);

  edges_.resize(l_ + 1);
  edges_[0] = 0.0;
  for (int j = 1; j <= l_; ++j) edges_[j] = capacity_ - (l_ - j) * m_eff_;
}

int FiniteApproxDist::region_of(double x) const {
  // l-1: bottom piece, n_c..l-2: exponential middle, 0..n_c-1: exact tail
  const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, x);
  const int j = static_cast<int>(it - edges_.begin()) - 1;
  return l_ - 1 - j;
}

double FiniteApproxDist::g_section(double x, int n) const {
  const long double delta = static_cast<long double>(delta_);
  const long double t = static_cast<long double>(rate_) * (x - capacity_);
  KahanLd s;
  s.add(1.0L);
  long double coeff = 1.0L;
  const long double ed = std::exp(-delta);
  for (int q = 1; q <= n; ++q) {
    coeff *= (q == 1) ? ed : ed / (q - 1);
    s.add(coeff * powi(delta * q + t, q - 1) * (t / q + delta - 1.0L));
  }
  return static_cast<double>(static_cast<long double>(atom_) * rate_ *
                             std::exp(-t) * s.sum);
}

double FiniteApproxDist::pdf(double x) const {
  if (x < 0.0 || x > capacity_)
    throw std::domain_error("pdf: x outside support [0, K)");
  if (x == capacity_)
    throw std::domain_error("pdf: the mass at K is an atom, not a density");
  const int n = region_of(x);
  if (n == l_ - 1) {
    if (delta_one_) return c_ * rate_ * x;
    return c_ * rate_ * std::exp(d_ * m_eff_) / d_ * std::expm1(d_ * x);
  }
  if (n >= n_c_) return c_ * std::exp(d_ * x);
  return g_section(x, n);
}

double FiniteApproxDist::partial_section(int n, double lo, double x) const {
  const long double delta = static_cast<long double>(delta_);
  const long double t1 = static_cast<long double>(rate_) * (lo - capacity_);
  const long double t2 = static_cast<long double>(rate_) * (x - capacity_);
  return static_cast<double>(static_cast<long double>(atom_) *
                             (section_antiderivative(delta, n, t1) -
                              section_antiderivative(delta, n, t2)));
}

double FiniteApproxDist::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= capacity_) return 1.0;
  const int n = region_of(x);
  if (n == l_ - 1) {
    if (delta_one_) return c_ * rate_ * x * x / 2.0;
    return c_ * rate_ * std::exp(d_ * m_eff_) / d_ * (std::expm1(d_ * x) / d_ - x);
  }
  if (n >= n_c_) {
    const double mid = delta_one_ ? c_ * (x - m_eff_)
                                  : c_ * (std::exp(d_ * x) - std::exp(d_ * m_eff_)) / d_;
    return lower_mass_ + mid;
  }
  double cum = lower_mass_ + mid_mass_;
  for (int m = n_c_ - 1; m > n; --m) cum += section_masses_[m];
  return cum + partial_section(n, edges_[l_ - 1 - n], x);
}

// ---------------------------------------------------------------------------
// approx_error (series form)

double approx_error(const FiniteExactDist& exact, const FiniteApproxDist& approx,
                    double x) {
  if (exact.sections() != approx.sections() ||
      std::fabs(exact.m_eff() - approx.m_eff()) > 0.0 ||
      std::fabs(exact.rate() - approx.rate()) > 0.0)
    throw std::invalid_argument("approx_error: mismatched distributions");
  if (x < 0.0 || x > exact.m_eff())
    throw std::domain_error("approx_error: x must lie in [0, M]");

  const int l = exact.sections();
  const long double delta = static_cast<long double>(exact.delta());
  const long double lam = static_cast<long double>(exact.rate());
  const long double lam_x = lam * x;
  const long double r_top = detail::r_series_ld(1.0L - l, l - 2, delta);
  const long double r_x =
      detail::r_series_ld(1.0L - l + static_cast<long double>(x) / exact.m_eff(),
                          l - 2, delta);
  const long double first = static_cast<long double>(exact.atom()) * lam *
                            std::exp(delta * (l - 1)) *
                            (r_top - std::exp(-lam_x) * r_x);

  const long double sigma1_series =
      std::exp(delta * l) *
      (detail::r_series_ld(static_cast<long double>(-l), l - 1, delta) -
       std::exp(-delta) * r_top);
  long double factor;
  if (approx.delta_one_branch()) {
    factor = lam * x;
  } else {
    const long double d = approx.d();
    factor = lam * std::exp(d * approx.m_eff()) / d * std::expm1(d * x);
  }
  const long double second =
      static_cast<long double>(approx.atom()) * lam * sigma1_series * factor;
  return static_cast<double>(first - second);
}

double approx_error(double x, const EffectiveParams& eff, const BufferSpec& buf,
                    int n_c) {
  const FiniteExactDist ex = finite_exact(eff, buf);
  const FiniteApproxDist ap = finite_approx(eff, buf, n_c);
  return approx_error(ex, ap, x);
}

// ---------------------------------------------------------------------------
// variant plumbing

double pdf_eval(const LimitingDistribution& dist, double x) {
  return std::visit([x](const auto& d) { return d.pdf(x); }, dist);
}

double cdf_eval(const LimitingDistribution& dist, double x) {
  return std::visit([x](const auto& d) { return d.cdf(x); }, dist);
}

double atom_mass(const LimitingDistribution& dist) {
  if (std::holds_alternative<InfiniteBufferDist>(dist)) return 0.0;
  if (const auto* e = std::get_if<FiniteExactDist>(&dist)) return e->atom();
  return std::get<FiniteApproxDist>(dist).atom();
}

double support_upper(const LimitingDistribution& dist) {
  if (const auto* e = std::get_if<FiniteExactDist>(&dist)) return e->capacity();
  if (const auto* a = std::get_if<FiniteApproxDist>(&dist)) return a->capacity();
  return std::numeric_limits<double>::infinity();
}

std::vector<double> section_breakpoints(const LimitingDistribution& dist) {
  std::vector<double> pts;
  if (const auto* inf = std::get_if<InfiniteBufferDist>(&dist)) {
    pts.push_back(inf->m_eff());
    return pts;
  }
  const double m = std::visit([](const auto& d) { return d.m_eff(); }, dist);
  const double k = support_upper(dist);
  const int l = static_cast<int>(std::lround(k / m));
  for (int n = 1; n < l; ++n) pts.push_back(n * m);
  return pts;
}

// ---------------------------------------------------------------------------
// integral-equation residuals

namespace {

// residual of the stationarity equations for the unbounded buffer:
//   g(x) = int_0^{min(x,M)} f(x-u) g(u) du + int_M^{M+x} f(x-u+M) g(u) du
double rhs_infinite(const InfiniteBufferDist& d, double x) {
  const double lam = d.rate();
  const double m = d.m_eff();
  auto f = [lam](double v) { return v >= 0.0 ? lam * std::exp(-lam * v) : 0.0; };
  const double up1 = std::min(x, m);
  double v = 0.0;
  if (up1 > 0.0)
    v += integrate_value([&](double u) { return f(x - u) * d.pdf(u); }, 0.0, up1);
  v += integrate_value([&](double u) { return f(x - u + m) * d.pdf(u); }, m, m + x);
  return v;
}

}  // namespace

double integral_residual(const InfiniteBufferDist& dist,
                         std::span<const double> points) {
  double worst = 0.0;
  for (double x : points) {
    if (x <= 0.0) continue;
    worst = std::fmax(worst, std::fabs(dist.pdf(x) - rhs_infinite(dist, x)));
  }
  return worst;
}

double integral_residual(const FiniteExactDist& dist,
                         std::span<const double> points) {
  const double lam = dist.rate();
  const double m = dist.m_eff();
  const double k = dist.capacity();
  auto f = [lam](double v) { return v >= 0.0 ? lam * std::exp(-lam * v) : 0.0; };
  auto fbar = [lam](double v) { return v >= 0.0 ? std::exp(-lam * v) : 1.0; };
  std::vector<double> bps;
  for (int n = 1; n < dist.sections(); ++n) bps.push_back(n * m);
  auto g = [&dist](double u) { return dist.pdf(u); };

  double worst = 0.0;
  for (double x : points) {
    if (x <= 0.0 || x >= k) continue;
    double rhs = 0.0;
    if (x < m) {
      rhs = integrate_split([&](double u) { return f(x - u) * g(u); }, 0.0, x, bps) +
            integrate_split([&](double u) { return f(x - u + m) * g(u); }, m, m + x, bps);
    } else if (x < k - m) {
      rhs = integrate_split([&](double u) { return f(x - u) * g(u); }, 0.0, m, bps) +
            integrate_split([&](double u) { return f(x - u + m) * g(u); }, m, m + x, bps);
    } else {
      rhs = integrate_split([&](double u) { return f(x - u) * g(u); }, 0.0, m, bps) +
            integrate_split([&](double u) { return f(x - u + m) * g(u); }, m, k, bps) +
            dist.atom() * f(x - k + m);
    }
    worst = std::fmax(worst, std::fabs(dist.pdf(x) - rhs));
  }

  // atom balance
  const double atom_rhs =
      (integrate_split([&](double u) { return fbar(k - u) * g(u); }, 0.0, m, bps) +
       integrate_split([&](double u) { return fbar(k - u + m) * g(u); }, m, k, bps)) /
      (1.0 - fbar(m));
  worst = std::fmax(worst, std::fabs(dist.atom() - atom_rhs));

  // unit area
  const double mass =
      integrate_split(g, 0.0, k, bps) + dist.atom();
  worst = std::fmax(worst, std::fabs(mass - 1.0));
  return worst;
}

double integral_residual(const LimitingDistribution& dist,
                         std::span<const double> points) {
  if (const auto* inf = std::get_if<InfiniteBufferDist>(&dist))
    return integral_residual(*inf, points);
  if (const auto* e = std::get_if<FiniteExactDist>(&dist))
    return integral_residual(*e, points);
  throw std::invalid_argument(
      "integral_residual: only exact distributions satisfy the equations");
}

// ---------------------------------------------------------------------------
// asymptotic consistency with the unbounded buffer

std::vector<AsymptoticRow> asymptotic_infinite_limit_check(
    double delta, std::span<const int> section_counts, int n_points) {
  if (!(delta > 1.0))
    throw std::domain_error(
        "asymptotic_infinite_limit_check: requires delta > 1");
  const EffectiveParams eff = effective_from_delta(delta, 1.0 / delta);
  const InfiniteBufferDist inf = infinite_pdf(eff);
  std::vector<AsymptoticRow> rows;
  for (int l : section_counts) {
    const FiniteExactDist fin = finite_exact(eff, BufferSpec::finite(l, eff.m_eff));
    double sup = 0.0;
    for (int i = 1; i < n_points; ++i) {
      const double x = eff.m_eff * i / n_points;
      sup = std::fmax(sup, std::fabs(fin.pdf(x) - inf.pdf(x)));
    }
    rows.push_back({l, sup, fin.atom()});
  }
  return rows;
}

}  // namespace ehstore
