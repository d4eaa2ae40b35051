#include "ehstore/performance.hpp"

#include <cmath>
#include <stdexcept>

namespace ehstore {

LinkParams LinkParams::from_snr(double snr_bar, double noise_power,
                                double harvest_mean_eff, double mod_a,
                                double mod_b, double rate_bits) {
  if (!(snr_bar > 0.0) || !(noise_power > 0.0) || !(harvest_mean_eff > 0.0))
    throw std::invalid_argument("LinkParams: snr_bar, noise_power and harvest mean must be > 0");
  if (!(mod_a > 0.0) || !(mod_b > 0.0))
    throw std::invalid_argument("LinkParams: mod_a and mod_b must be > 0");
  if (rate_bits < 0.0) throw std::invalid_argument("LinkParams: rate_bits must be >= 0");
  LinkParams p;
  p.snr_bar = snr_bar;
  p.noise_power = noise_power;
  p.ul_gain_mean = snr_bar * noise_power / harvest_mean_eff;
  p.mod_a = mod_a;
  p.mod_b = mod_b;
  p.rate_bits = rate_bits;
  p.snr_threshold = std::exp2(rate_bits) - 1.0;
  return p;
}

LinkParams LinkParams::with_snr(double snr_bar_linear) const {
  LinkParams p = *this;
  p.snr_bar = snr_bar_linear;
  return p;
}

double transmission_probability_infinite(double delta) {
  if (!(delta > 0.0))
    throw std::domain_error("transmission_probability: delta must be > 0");
  return delta <= 1.0 ? 1.0 : 1.0 / delta;
}

double transmission_probability(const FiniteExactDist& dist) {
  return 1.0 - dist.lower_mass();
}

double transmission_probability(const FiniteApproxDist& dist) {
  if (dist.delta_one_branch())
    return 1.0 - dist.c() * dist.m_eff() / 2.0;
  return 1.0 - dist.c() * std::exp(dist.d() * dist.m_eff()) *
                   (1.0 - dist.delta()) / dist.d();
}

double transmission_probability(const LimitingDistribution& dist) {
  if (const auto* inf = std::get_if<InfiniteBufferDist>(&dist))
    return transmission_probability_infinite(inf->delta());
  if (const auto* e = std::get_if<FiniteExactDist>(&dist))
    return transmission_probability(*e);
  return transmission_probability(std::get<FiniteApproxDist>(dist));
}

double aer(const LinkParams& link, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("aer: delta must be > 0");
  const double gd = link.mod_b * link.snr_bar * delta;
  return 0.5 * link.mod_a * (1.0 - std::sqrt(gd / (2.0 + gd)));
}

double channel_outage(const LinkParams& link, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("channel_outage: delta must be > 0");
  return -std::expm1(-link.snr_threshold / (delta * link.snr_bar));
}

double total_outage(double p_trans, double p_channel) {
  if (p_trans < 0.0 || p_trans > 1.0 || p_channel < 0.0 || p_channel > 1.0)
    throw std::domain_error("total_outage: probabilities must lie in [0,1]");
  return (1.0 - p_trans) + p_trans * p_channel;
}

SlopeFit diversity_slope(const LinkParams& link, double delta,
                         std::span<const double> snr_grid) {
  if (snr_grid.size() < 2)
    throw std::invalid_argument("diversity_slope: need at least 2 grid points");
  const std::size_t n = snr_grid.size();
  double sx = 0, sy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(snr_grid[i]);
    ly[i] = std::log(channel_outage(link.with_snr(snr_grid[i]), delta));
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - my - fit.slope * (lx[i] - mx);
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

namespace {

struct OutagePoint {
  double outage;
  double p_trans;
};

OutagePoint outage_at(const BufferSpec& buf_template, double harvest_mean_eff,
                      const LinkParams& link, double delta, int n_c) {
  const EffectiveParams eff = effective_from_delta(delta, harvest_mean_eff);
  double pt;
  if (!buf_template.is_finite()) {
    pt = transmission_probability_infinite(delta);
  } else if (buf_template.sections() >= 3) {
    const BufferSpec buf = BufferSpec::finite(buf_template.sections(), eff.m_eff);
    pt = transmission_probability(finite_approx(eff, buf, n_c));
  } else {
    const BufferSpec buf = BufferSpec::finite(buf_template.sections(), eff.m_eff);
    pt = transmission_probability(finite_exact(eff, buf));
  }
  return {total_outage(pt, channel_outage(link, delta)), pt};
}

}  // namespace

DeltaOpt optimal_delta(const BufferSpec& buf_template, double harvest_mean_eff,
                       const LinkParams& link, std::span<const double> delta_grid,
                       int n_c) {
  if (delta_grid.empty())
    throw std::invalid_argument("optimal_delta: empty grid");
  std::size_t best = 0;
  double best_val = outage_at(buf_template, harvest_mean_eff, link,
                              delta_grid[0], n_c).outage;
  for (std::size_t i = 1; i < delta_grid.size(); ++i) {
    const double v =
        outage_at(buf_template, harvest_mean_eff, link, delta_grid[i], n_c).outage;
    if (v < best_val) {  // strict: ties keep the smaller delta
      best_val = v;
      best = i;
    }
  }

  double lo = delta_grid[best > 0 ? best - 1 : best];
  double hi = delta_grid[best + 1 < delta_grid.size() ? best + 1 : best];
  double delta_star = delta_grid[best];
  double outage_star = best_val;
  if (hi > lo) {
    // one golden-section pass inside the bracket
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = outage_at(buf_template, harvest_mean_eff, link, x1, n_c).outage;
    double f2 = outage_at(buf_template, harvest_mean_eff, link, x2, n_c).outage;
    for (int it = 0; it < 60 && (b - a) > 1e-10 * (1.0 + b); ++it) {
      if (f1 <= f2) {  // keep the left candidate on ties
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = outage_at(buf_template, harvest_mean_eff, link, x1, n_c).outage;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = outage_at(buf_template, harvest_mean_eff, link, x2, n_c).outage;
      }
    }
    const double xr = f1 <= f2 ? x1 : x2;
    const double fr = std::min(f1, f2);
    if (fr < outage_star || (fr == outage_star && xr < delta_star)) {
      delta_star = xr;
      outage_star = fr;
    }
  }
  DeltaOpt opt;
  opt.delta_star = delta_star;
  opt.outage_star = outage_star;
  opt.p_trans_star =
      outage_at(buf_template, harvest_mean_eff, link, delta_star, n_c).p_trans;
  return opt;
}

}  // namespace ehstore
