#pragma once

#include <span>

#include "ehstore/limiting_dist.hpp"
#include "ehstore/storage.hpp"

namespace ehstore {

/// Uplink link-budget parameters. snr_bar is the mean SNR the node would see
/// when transmitting the whole mean harvested energy: ul_gain_mean * X_eff /
/// noise_power; the SNR at threshold delta is then delta * snr_bar * h with
/// h a unit-mean exponential fade. Uncoded error rates follow the
/// a*Q(sqrt(b*snr)) family (BPSK: a = 1, b = 2).
struct LinkParams {
  double ul_gain_mean = 0.0;
  double noise_power = 0.0;      // [W]
  double snr_bar = 0.0;          // linear
  double mod_a = 1.0;
  double mod_b = 2.0;
  double rate_bits = 0.0;        // fixed transmission rate [bits/channel use]
  double snr_threshold = 0.0;    // 2^rate_bits - 1

  static LinkParams from_snr(double snr_bar, double noise_power,
                             double harvest_mean_eff, double mod_a, double mod_b,
                             double rate_bits);
  LinkParams with_snr(double snr_bar_linear) const;
};

/// Limiting fraction of transmitting slots.
/// Unbounded buffer: 1 for delta <= 1 (the buffer drifts upward and the node
/// eventually always transmits), 1/delta for delta > 1.
double transmission_probability_infinite(double delta);
/// Finite buffer, exact: 1 - integral of the bottom piece.
double transmission_probability(const FiniteExactDist& dist);
/// Finite buffer, closed form from the approximate bottom piece.
double transmission_probability(const FiniteApproxDist& dist);
double transmission_probability(const LimitingDistribution& dist);

/// Average error rate over the fade, given transmission:
///   (a/2) [1 - sqrt(b g d / (2 + b g d))] with g = snr_bar, d = delta.
/// Buffer size does not enter.
double aer(const LinkParams& link, double delta);

/// P(SNR < snr_threshold) for a transmitting slot: 1 - e^{-thr/(delta snr_bar)}.
double channel_outage(const LinkParams& link, double delta);

/// Missed opportunity or channel outage: (1 - pt) + pt * pc.
double total_outage(double p_trans, double p_channel);

struct SlopeFit {
  double slope = 0.0;
  double rms_residual = 0.0;
};

/// Least-squares slope of log channel outage against log snr_bar over the
/// given SNR grid (linear values spanning at least two decades).
SlopeFit diversity_slope(const LinkParams& link, double delta,
                         std::span<const double> snr_grid);

struct DeltaOpt {
  double delta_star = 0.0;
  double outage_star = 0.0;
  double p_trans_star = 0.0;
};

/// Grid argmin of the total outage over delta, refined by one golden-section
/// pass inside the best bracket; ties break toward the smaller delta. The
/// buffer keeps its section count while the capacity follows delta.
DeltaOpt optimal_delta(const BufferSpec& buf_template, double harvest_mean_eff,
                       const LinkParams& link, std::span<const double> delta_grid,
                       int n_c = 2);

}  // namespace ehstore
