#pragma once

#include <cstdint>
#include <vector>

#include "ehstore/limiting_dist.hpp"
#include "ehstore/performance.hpp"
#include "ehstore/storage.hpp"

namespace ehstore {

enum class ErrorCountingMode {
  /// Accumulate a*Q(sqrt(b*snr)) given each drawn fade (variance-reduced
  /// estimator of the same expectation as bit counting).
  analytic_conditional,
  /// Draw bits_per_slot Bernoulli bit errors per transmitting slot.
  symbol_level,
};

struct SimConfig {
  static constexpr std::uint64_t kAutoWarmup = ~std::uint64_t{0};

  std::uint64_t n_slots = 1'000'000;  // total slots across all replications
  std::uint64_t warmup_slots = kAutoWarmup;  // per replication; kAutoWarmup picks a heuristic
  std::uint64_t seed = 1;
  int n_replications = 1;
  int histogram_bins = 100;
  ErrorCountingMode error_mode = ErrorCountingMode::analytic_conditional;
  int bits_per_slot = 8;
};

struct CiEstimate {
  double value = 0.0;
  double ci_radius = 0.0;  // 95% (1.96 sigma), from replication scatter when
                           // n_replications >= 2
};

struct Histogram {
  std::vector<double> edges;   // bins + 1 entries
  std::vector<double> masses;  // post-warmup fractions; excludes the atom
};

struct ReplicationSummary {
  double p_trans = 0, aer = 0, channel_outage = 0, total_outage = 0, atom_freq = 0;
  std::uint64_t slots = 0;
};

struct SimResult {
  CiEstimate p_trans, aer, channel_outage, total_outage;
  double atom_freq = 0.0;
  double atom_ci_radius = 0.0;
  Histogram buffer_histogram;
  std::uint64_t slots_counted = 0;
  /// Set for an unbounded buffer with delta <= 1: the chain has no limiting
  /// distribution and the histogram describes a transient.
  bool nonstationary = false;
  std::vector<ReplicationSummary> replications;
};

/// Heuristic warmup: ~10 buffer fill times, at least 1000 slots.
std::uint64_t default_warmup(const EffectiveParams& eff, const BufferSpec& buf);

/// Runs the storage recursion with i.i.d. exponential harvests and, on
/// transmitting slots, exponential uplink power gains. n_slots is split
/// evenly across replications; each replication discards its warmup and uses
/// stream r of the seed, so results are bit-reproducible from (config,
/// params) alone. Error and outage estimates are conditioned on transmission.
SimResult simulate(const EffectiveParams& eff, const BufferSpec& buf,
                   const LinkParams& link, const SimConfig& cfg);

struct DistributionDistance {
  double l1 = 0.0;        // density part, bin-integrated
  double sup_cdf = 0.0;   // Kolmogorov distance with the atom included
  double atom_abs_diff = 0.0;
};

/// Compares the empirical histogram/atom against an analytic distribution on
/// the same support. Throws std::invalid_argument on support mismatch.
DistributionDistance distribution_distance(const SimResult& result,
                                           const LimitingDistribution& dist);

}  // namespace ehstore
