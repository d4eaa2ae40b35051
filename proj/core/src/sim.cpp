#include "ehstore/sim.hpp"

#include <cmath>
#include <future>
#include <stdexcept>

#include "ehstore/rng.hpp"
#include "ehstore/special_math.hpp"

namespace ehstore {

namespace {

struct RepCounters {
  std::uint64_t counted = 0;
  std::uint64_t transmitted = 0;
  std::uint64_t atom = 0;
  std::uint64_t channel_outages = 0;
  double err_sum = 0.0;       // analytic-conditional mode
  double err_sum_sq = 0.0;
  std::uint64_t bit_errors = 0;  // symbol-level mode
  std::uint64_t bits = 0;
  std::vector<std::uint64_t> hist;
};

RepCounters run_replication(const EffectiveParams& eff, const BufferSpec& buf,
                            const LinkParams& link, const SimConfig& cfg,
                            std::uint64_t rep, std::uint64_t slots,
                            std::uint64_t warmup, double hist_hi) {
  RepCounters c;
  c.hist.assign(cfg.histogram_bins, 0);
  CounterRng rng(cfg.seed, rep);

  const double m = eff.m_eff;
  const double cap = buf.capacity();
  const double atom_lo = buf.is_finite() ? cap * (1.0 - 1e-12) : 0.0;
  const double bin_scale = cfg.histogram_bins / hist_hi;
  const double snr_scale = eff.delta * link.snr_bar;
  const bool symbol_mode = cfg.error_mode == ErrorCountingMode::symbol_level;

  double b = 0.0;  // empty buffer start; the limit is reached from any state
  for (std::uint64_t i = 0; i < slots; ++i) {
    const bool transmit = b > m;
    const bool counted = i >= warmup;
    if (counted) {
      ++c.counted;
      if (buf.is_finite() && b >= atom_lo) {
        ++c.atom;
      } else {
        int bin = static_cast<int>(b * bin_scale);
        if (bin >= cfg.histogram_bins) bin = cfg.histogram_bins - 1;
        c.hist[bin] += 1;
      }
    }
    if (transmit) {
      const double snr = snr_scale * (-std::log(rng.next_unit()));
      const double pe = std::fmin(1.0, link.mod_a * gaussian_q(std::sqrt(link.mod_b * snr)));
      if (counted) {
        ++c.transmitted;
        if (snr < link.snr_threshold) ++c.channel_outages;
        if (!symbol_mode) {
          c.err_sum += pe;
          c.err_sum_sq += pe * pe;
        }
      }
      if (symbol_mode) {
        for (int k = 0; k < cfg.bits_per_slot; ++k) {
          const bool err = rng.next_unit() <= pe;
          if (counted) {
            ++c.bits;
            if (err) ++c.bit_errors;
          }
        }
      }
    }
    b = step(b, rng.next_exp(eff.harvest_mean_eff), eff, buf);
  }
  return c;
}

CiEstimate combine(double pooled, const std::vector<double>& per_rep,
                   double fallback_var, std::uint64_t fallback_n) {
  CiEstimate e;
  e.value = pooled;
  const std::size_t r = per_rep.size();
  if (r >= 2) {
    double mean = 0.0;
    for (double v : per_rep) mean += v;
    mean /= r;
    double ss = 0.0;
    for (double v : per_rep) ss += (v - mean) * (v - mean);
    e.ci_radius = 1.96 * std::sqrt(ss / (r - 1) / r);
  } else if (fallback_n > 0) {
    e.ci_radius = 1.96 * std::sqrt(std::fmax(fallback_var, 0.0) / fallback_n);
  }
  return e;
}

}  // namespace

std::uint64_t default_warmup(const EffectiveParams& eff, const BufferSpec& buf) {
  const double fill = buf.is_finite() ? buf.sections() : 20.0;
  const double w = std::ceil(10.0 * fill / eff.delta);
  return std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(w));
}

SimResult simulate(const EffectiveParams& eff, const BufferSpec& buf,
                   const LinkParams& link, const SimConfig& cfg) {
  if (cfg.n_replications < 1)
    throw std::invalid_argument("simulate: n_replications must be >= 1");
  if (cfg.histogram_bins < 10)
    throw std::invalid_argument("simulate: histogram_bins must be >= 10");
  if (cfg.bits_per_slot < 1)
    throw std::invalid_argument("simulate: bits_per_slot must be >= 1");
  const std::uint64_t per_rep = cfg.n_slots / cfg.n_replications;
  const std::uint64_t warmup = cfg.warmup_slots == SimConfig::kAutoWarmup
                                   ? default_warmup(eff, buf)
                                   : cfg.warmup_slots;
  if (per_rep == 0 || per_rep <= warmup)
    throw std::invalid_argument(
        "simulate: n_slots per replication must exceed the warmup");

  const bool nonstat = !buf.is_finite() && eff.delta <= 1.0;
  double hist_hi;
  if (buf.is_finite()) {
    hist_hi = buf.capacity();
  } else if (eff.delta > 1.0) {
    // place the edge where the analytic tail mass is negligible
    const InfiniteBufferDist d = infinite_pdf(eff);
    hist_hi = eff.m_eff + std::log(1e13) / (-d.p());
  } else {
    // transient upward drift: ballistic estimate of the final level
    hist_hi = 1.1 * per_rep * (eff.harvest_mean_eff - eff.m_eff) +
              10.0 * eff.harvest_mean_eff;
  }

  std::vector<std::future<RepCounters>> futures;
  futures.reserve(cfg.n_replications);
  for (int r = 0; r < cfg.n_replications; ++r) {
    futures.push_back(std::async(std::launch::async, [&, r] {
      return run_replication(eff, buf, link, cfg, static_cast<std::uint64_t>(r),
                             per_rep, warmup, hist_hi);
    }));
  }
  std::vector<RepCounters> reps;
  reps.reserve(cfg.n_replications);
  for (auto& f : futures) reps.push_back(f.get());

  SimResult out;
  out.nonstationary = nonstat;

  std::uint64_t counted = 0, transmitted = 0, atom = 0, outages = 0, bits = 0,
                bit_errors = 0;
  double err_sum = 0.0, err_sum_sq = 0.0;
  std::vector<std::uint64_t> hist(cfg.histogram_bins, 0);
  std::vector<double> pt_r, aer_r, co_r, to_r, atom_r;
  for (const RepCounters& c : reps) {
    counted += c.counted;
    transmitted += c.transmitted;
    atom += c.atom;
    outages += c.channel_outages;
    bits += c.bits;
    bit_errors += c.bit_errors;
    err_sum += c.err_sum;
    err_sum_sq += c.err_sum_sq;
    for (int i = 0; i < cfg.histogram_bins; ++i) hist[i] += c.hist[i];

    ReplicationSummary s;
    s.slots = c.counted;
    s.p_trans = c.counted ? static_cast<double>(c.transmitted) / c.counted : 0.0;
    s.atom_freq = c.counted ? static_cast<double>(c.atom) / c.counted : 0.0;
    s.channel_outage =
        c.transmitted ? static_cast<double>(c.channel_outages) / c.transmitted : 0.0;
    if (cfg.error_mode == ErrorCountingMode::symbol_level)
      s.aer = c.bits ? static_cast<double>(c.bit_errors) / c.bits : 0.0;
    else
      s.aer = c.transmitted ? c.err_sum / c.transmitted : 0.0;
    s.total_outage =
        c.counted
            ? static_cast<double>(c.counted - c.transmitted + c.channel_outages) /
                  c.counted
            : 0.0;
    out.replications.push_back(s);
    pt_r.push_back(s.p_trans);
    aer_r.push_back(s.aer);
    co_r.push_back(s.channel_outage);
    to_r.push_back(s.total_outage);
    atom_r.push_back(s.atom_freq);
  }

  out.slots_counted = counted;
  const double pt = counted ? static_cast<double>(transmitted) / counted : 0.0;
  out.p_trans = combine(pt, pt_r, pt * (1.0 - pt), counted);
  const double co =
      transmitted ? static_cast<double>(outages) / transmitted : 0.0;
  out.channel_outage = combine(co, co_r, co * (1.0 - co), transmitted);
  const double to =
      counted ? static_cast<double>(counted - transmitted + outages) / counted : 0.0;
  out.total_outage = combine(to, to_r, to * (1.0 - to), counted);
  if (cfg.error_mode == ErrorCountingMode::symbol_level) {
    const double ae = bits ? static_cast<double>(bit_errors) / bits : 0.0;
    out.aer = combine(ae, aer_r, ae * (1.0 - ae), bits);
  } else {
    const double ae = transmitted ? err_sum / transmitted : 0.0;
    const double var = transmitted ? err_sum_sq / transmitted - ae * ae : 0.0;
    out.aer = combine(ae, aer_r, var, transmitted);
  }
  const double af = counted ? static_cast<double>(atom) / counted : 0.0;
  out.atom_freq = af;
  {
    const CiEstimate tmp = combine(af, atom_r, af * (1.0 - af), counted);
    out.atom_ci_radius = tmp.ci_radius;
  }

  out.buffer_histogram.edges.resize(cfg.histogram_bins + 1);
  out.buffer_histogram.masses.resize(cfg.histogram_bins);
  for (int i = 0; i <= cfg.histogram_bins; ++i)
    out.buffer_histogram.edges[i] = hist_hi * i / cfg.histogram_bins;
  for (int i = 0; i < cfg.histogram_bins; ++i)
    out.buffer_histogram.masses[i] =
        counted ? static_cast<double>(hist[i]) / counted : 0.0;
  return out;
}

DistributionDistance distribution_distance(const SimResult& result,
                                           const LimitingDistribution& dist) {
  const Histogram& h = result.buffer_histogram;
  if (h.edges.size() < 2 || h.masses.size() + 1 != h.edges.size())
    throw std::invalid_argument("distribution_distance: malformed histogram");
  const double upper = support_upper(dist);
  const double atom = atom_mass(dist);
  const bool finite = std::isfinite(upper);
  if (finite &&
      std::fabs(h.edges.back() - upper) > 1e-9 * std::fmax(1.0, upper))
    throw std::invalid_argument(
        "distribution_distance: histogram support does not match the "
        "distribution");

  DistributionDistance dd;
  double cum_emp = 0.0;
  double prev_cdf = 0.0;
  for (std::size_t i = 0; i < h.masses.size(); ++i) {
    const double hi = h.edges[i + 1];
    double cdf_hi = cdf_eval(dist, hi);
    if (finite && i + 1 == h.masses.size()) cdf_hi -= atom;  // density part only
    const double analytic_mass = cdf_hi - prev_cdf;
    prev_cdf = cdf_hi;
    dd.l1 += std::fabs(h.masses[i] - analytic_mass);
    cum_emp += h.masses[i];
    const double cdf_cmp = (finite && i + 1 == h.masses.size())
                               ? cdf_hi + atom  // both sides include the atom at K
                               : cdf_hi;
    const double emp_cmp = (finite && i + 1 == h.masses.size())
                               ? cum_emp + result.atom_freq
                               : cum_emp;
    dd.sup_cdf = std::fmax(dd.sup_cdf, std::fabs(emp_cmp - cdf_cmp));
  }
  dd.atom_abs_diff = std::fabs(result.atom_freq - atom);
  return dd;
}

}  // namespace ehstore
