#pragma once

#include <algorithm>
#include <limits>

namespace ehstore {

/// Downlink energy-harvesting profile. Energies are joules per unit slot,
/// so energy and power are used interchangeably throughout the library.
struct EhProfile {
  double dl_power = 1.0;          // transmit power of the access point [W]
  double dl_gain_mean = 0.0;      // mean downlink channel power gain
  double rf_dc_efficiency = 0.7;  // RF-to-DC conversion efficiency, in (0,1)
  double harvest_mean = 0.0;      // mean harvested energy per slot [J]
  double harvest_rate = 0.0;      // 1 / harvest_mean [1/J]

  static EhProfile from_components(double dl_power, double dl_gain_mean,
                                   double rf_dc_efficiency);
  /// Pins the mean harvested energy directly and backfills the gain.
  static EhProfile from_harvest_mean(double harvest_mean, double dl_power = 1.0,
                                     double rf_dc_efficiency = 0.7);
};

/// The on-off policy target: transmit at target_power iff the stored energy
/// strictly exceeds it, otherwise stay silent.
struct Policy {
  double target_power = 0.0;  // [W]
  static Policy make(double target_power);
};

/// Hardware imperfection parameters; (1, 1, 0) is the ideal system.
struct Imperfections {
  double pa_inefficiency = 1.0;    // alpha >= 1
  double storage_efficiency = 1.0; // beta in (0, 1]
  double circuit_power = 0.0;      // [W], >= 0
  static Imperfections ideal() { return {}; }
  static Imperfections make(double pa_inefficiency, double storage_efficiency,
                            double circuit_power);
};

/// Ideal-system equivalents after absorbing the imperfections:
/// the policy threshold becomes m_eff = circuit_power + alpha * M and the
/// harvest law is scaled to mean beta * X.
struct EffectiveParams {
  double m_eff = 0.0;             // effective threshold [J]
  double harvest_mean_eff = 0.0;  // beta * X mean [J]
  double harvest_rate_eff = 0.0;  // 1 / harvest_mean_eff [1/J]
  double delta = 0.0;             // m_eff / harvest_mean_eff
};

EffectiveParams effective_params(const EhProfile& profile, const Policy& policy,
                                 const Imperfections& imp);

/// Builds EffectiveParams directly from the dimensionless ratio delta and the
/// effective mean harvest (the form parameter sweeps work in).
EffectiveParams effective_from_delta(double delta, double harvest_mean_eff);

/// Energy buffer: either unbounded or of capacity K = sections * m_eff.
class BufferSpec {
 public:
  static BufferSpec infinite();
  /// Finite buffer with capacity an integer multiple of the threshold;
  /// sections >= 2 is required by the closed-form solution.
  static BufferSpec finite(int sections, double m_eff);
  /// Finite buffer given the capacity itself; checks K = l * m_eff.
  static BufferSpec finite_capacity(double capacity, double m_eff);

  bool is_finite() const { return finite_; }
  int sections() const { return sections_; }
  double capacity() const { return capacity_; }

 private:
  BufferSpec(bool finite, int sections, double capacity)
      : finite_(finite), sections_(sections), capacity_(capacity) {}
  bool finite_ = false;
  int sections_ = 0;
  double capacity_ = std::numeric_limits<double>::infinity();
};

/// One slot of the storage recursion:
///   next = min(b - m_eff * 1{b > m_eff} + harvest, K).
/// The transmit indicator is strict; a buffer exactly at the threshold
/// stays silent.
inline double step(double b, double harvest, const EffectiveParams& eff,
                   const BufferSpec& buf) {
  const bool transmit = b > eff.m_eff;
  double next = b - (transmit ? eff.m_eff : 0.0) + harvest;
  if (buf.is_finite()) next = std::min(next, buf.capacity());
  return next;
}

}  // namespace ehstore
