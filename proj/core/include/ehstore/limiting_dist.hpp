#pragma once

#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ehstore/storage.hpp"

namespace ehstore {

/// Raised when a closed-form evaluation would cancel away so many digits
/// that fewer than ~5 significant decimal digits survive (very large
/// section counts combined with large delta).
class NumericInstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Limiting pdf of the buffer content for an unbounded buffer and
/// exponential harvesting with delta > 1:
///   g(x) = (1 - e^{p x}) / M            on (0, M]
///   g(x) = -p e^{p x} / (delta e^{p M}) on (M, inf)
/// where p < 0 solves rate * e^{p M} = rate + p.
class InfiniteBufferDist {
 public:
  double pdf(double x) const;
  double cdf(double x) const;

  double m_eff() const { return m_eff_; }
  double rate() const { return rate_; }
  double delta() const { return delta_; }
  double p() const { return p_; }

  static InfiniteBufferDist from_state(double m_eff, double rate, double p);

 private:
  friend InfiniteBufferDist infinite_pdf(const EffectiveParams&);
  InfiniteBufferDist() = default;
  double m_eff_ = 0, rate_ = 0, delta_ = 0, p_ = 0, tail_coeff_ = 0;
};

/// Exact limiting distribution for a finite buffer K = l * M: a piecewise
/// analytic density on [0, K) plus an atom at K. Sections are indexed from
/// the top: section n covers [K-(n+1)M, K-nM) for n = 0..l-2 and the bottom
/// piece covers [0, M).
class FiniteExactDist {
 public:
  double pdf(double x) const;          // density on [0, K); throws at x = K
  double cdf(double x) const;          // includes the atom for x >= K
  double atom() const { return atom_; }

  double m_eff() const { return m_eff_; }
  double rate() const { return rate_; }
  double delta() const { return delta_; }
  double capacity() const { return capacity_; }
  int sections() const { return l_; }

  /// Closed-form mass of the bottom piece, integral of g over [0, M).
  double lower_mass() const;
  /// Closed-form mass of top section n (n = 0..l-2).
  double section_mass(int n) const;

  /// Copy with the atom scaled by (1 + rel_change); derived masses follow.
  /// Used by the validation suite to confirm that the integral-equation
  /// residual detects a wrong distribution.
  FiniteExactDist perturbed_atom(double rel_change) const;

  static FiniteExactDist from_state(double m_eff, double rate, int sections,
                                    double atom);

 private:
  friend FiniteExactDist finite_exact(const EffectiveParams&, const BufferSpec&);
  FiniteExactDist() = default;
  void build(double m_eff, double rate, int sections, double atom_override,
             bool has_override);
  double g_lower(double x) const;
  double g_section(double x, int n) const;
  double partial_lower(double x) const;            // integral over [0, x]
  double partial_section(int n, double lo, double x) const;
  int section_of(double x) const;

  double m_eff_ = 0, rate_ = 0, delta_ = 0, capacity_ = 0;
  int l_ = 0;
  double atom_ = 0;
  double s2_ = 0;                       // lower mass / atom
  std::vector<double> section_masses_;  // n = 0..l-2
  std::vector<double> cum_left_;        // cdf at the left edge of section n
  std::vector<double> edges_;           // ascending section edges, 0..K
};

/// Approximate finite-buffer distribution: the exact top n_c sections
/// (rescaled), a single exponential c e^{d x} across the middle, and the
/// matching Volterra solution on [0, M). d solves the same root equation as
/// p, taken on the lower branch for delta <= 1 and the principal branch for
/// delta > 1; d and the approximation degenerate smoothly at delta = 1.
class FiniteApproxDist {
 public:
  double pdf(double x) const;
  double cdf(double x) const;
  double atom() const { return atom_; }  // approximate full-buffer mass

  double m_eff() const { return m_eff_; }
  double rate() const { return rate_; }
  double delta() const { return delta_; }
  double capacity() const { return capacity_; }
  int sections() const { return l_; }
  int tail_sections() const { return n_c_; }

  double d() const { return d_; }
  double c() const { return c_; }
  double sigma1() const { return sigma1_; }
  double sigma2() const { return sigma2_; }
  bool delta_one_branch() const { return delta_one_; }

  static FiniteApproxDist from_state(double m_eff, double rate, int sections,
                                     int tail_sections, double atom);

 private:
  friend FiniteApproxDist finite_approx(const EffectiveParams&,
                                        const BufferSpec&, int);
  FiniteApproxDist() = default;
  void build(double m_eff, double rate, int sections, int n_c,
             double atom_override, bool has_override);
  double g_section(double x, int n) const;
  double partial_section(int n, double lo, double x) const;
  int region_of(double x) const;

  double m_eff_ = 0, rate_ = 0, delta_ = 0, capacity_ = 0;
  int l_ = 0, n_c_ = 0;
  bool delta_one_ = false;
  double d_ = 0, c_ = 0, sigma1_ = 0, sigma2_ = 0, atom_ = 0;
  double lower_mass_ = 0, mid_mass_ = 0;
  std::vector<double> section_masses_;  // n = 0..n_c-1
  std::vector<double> edges_;           // ascending section edges, 0..K
};

using LimitingDistribution =
    std::variant<InfiniteBufferDist, FiniteExactDist, FiniteApproxDist>;

/// Constructors. infinite_pdf requires delta > 1 strictly; for delta <= 1 no
/// stationary distribution exists on an unbounded buffer and a domain error
/// is raised (delta = 1 included: the root degenerates to p = 0).
InfiniteBufferDist infinite_pdf(const EffectiveParams& eff);
FiniteExactDist finite_exact(const EffectiveParams& eff, const BufferSpec& buf);
FiniteApproxDist finite_approx(const EffectiveParams& eff, const BufferSpec& buf,
                               int n_c = 2);

/// Pointwise error g_{l-1}(x) - g~_{l-1}(x) of the approximation on [0, M],
/// evaluated through its own series formula (not by subtracting the two
/// pdfs), so it can cross-check them.
double approx_error(const FiniteExactDist& exact, const FiniteApproxDist& approx,
                    double x);
double approx_error(double x, const EffectiveParams& eff, const BufferSpec& buf,
                    int n_c = 2);

/// Density / distribution evaluation across the variant. pdf_eval throws a
/// domain error outside the support and at the atom (query the atom through
/// atom_mass instead).
double pdf_eval(const LimitingDistribution& dist, double x);
double cdf_eval(const LimitingDistribution& dist, double x);
double atom_mass(const LimitingDistribution& dist);
double support_upper(const LimitingDistribution& dist);
/// Interior points where the density is only piecewise analytic.
std::vector<double> section_breakpoints(const LimitingDistribution& dist);

/// Sup-norm residual of the stationarity integral equations evaluated by
/// adaptive quadrature at the given points. For finite distributions the
/// atom balance equation and the unit-area condition are included in the
/// sup. A correct closed form scores ~1e-9; a perturbed one does not.
double integral_residual(const InfiniteBufferDist& dist,
                         std::span<const double> points);
double integral_residual(const FiniteExactDist& dist,
                         std::span<const double> points);
double integral_residual(const LimitingDistribution& dist,
                         std::span<const double> points);

struct AsymptoticRow {
  int sections;
  double sup_error;  // sup over [0, M] of |finite g_{l-1} - infinite g_1|
  double atom;
};

/// For delta > 1, the finite-buffer bottom piece converges to the
/// infinite-buffer one as the buffer grows; returns the sup-error and atom
/// per requested section count.
std::vector<AsymptoticRow> asymptotic_infinite_limit_check(
    double delta, std::span<const int> section_counts, int n_points = 200);

}  // namespace ehstore
