#include "ehstore/storage.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ehstore {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

EhProfile EhProfile::from_components(double dl_power, double dl_gain_mean,
                                     double rf_dc_efficiency) {
  check(dl_power > 0.0, "EhProfile: dl_power must be > 0");
  check(dl_gain_mean > 0.0, "EhProfile: dl_gain_mean must be > 0");
  check(rf_dc_efficiency > 0.0 && rf_dc_efficiency < 1.0,
        "EhProfile: rf_dc_efficiency must lie in (0,1)");
  EhProfile p;
  p.dl_power = dl_power;
  p.dl_gain_mean = dl_gain_mean;
  p.rf_dc_efficiency = rf_dc_efficiency;
  p.harvest_mean = rf_dc_efficiency * dl_power * dl_gain_mean;
  p.harvest_rate = 1.0 / p.harvest_mean;
  return p;
}

EhProfile EhProfile::from_harvest_mean(double harvest_mean, double dl_power,
                                       double rf_dc_efficiency) {
  check(harvest_mean > 0.0, "EhProfile: harvest_mean must be > 0");
  return from_components(dl_power, harvest_mean / (rf_dc_efficiency * dl_power),
                         rf_dc_efficiency);
}

Policy Policy::make(double target_power) {
  check(target_power > 0.0, "Policy: target_power must be > 0");
  return Policy{target_power};
}

Imperfections Imperfections::make(double pa_inefficiency,
                                  double storage_efficiency,
                                  double circuit_power) {
  check(pa_inefficiency >= 1.0, "Imperfections: pa_inefficiency must be >= 1");
  check(storage_efficiency > 0.0 && storage_efficiency <= 1.0,
        "Imperfections: storage_efficiency must lie in (0,1]");
  check(circuit_power >= 0.0, "Imperfections: circuit_power must be >= 0");
  return Imperfections{pa_inefficiency, storage_efficiency, circuit_power};
}

EffectiveParams effective_params(const EhProfile& profile, const Policy& policy,
                                 const Imperfections& imp) {
  check(profile.harvest_mean > 0.0, "effective_params: invalid profile");
  check(policy.target_power > 0.0, "effective_params: invalid policy");
  EffectiveParams eff;
  eff.m_eff = imp.circuit_power + imp.pa_inefficiency * policy.target_power;
  eff.harvest_mean_eff = imp.storage_efficiency * profile.harvest_mean;
  eff.harvest_rate_eff = 1.0 / eff.harvest_mean_eff;
  eff.delta = eff.m_eff / eff.harvest_mean_eff;
  return eff;
}

EffectiveParams effective_from_delta(double delta, double harvest_mean_eff) {
  check(delta > 0.0, "effective_from_delta: delta must be > 0");
  check(harvest_mean_eff > 0.0, "effective_from_delta: harvest_mean_eff must be > 0");
  EffectiveParams eff;
  eff.m_eff = delta * harvest_mean_eff;
  eff.harvest_mean_eff = harvest_mean_eff;
  eff.harvest_rate_eff = 1.0 / harvest_mean_eff;
  eff.delta = delta;
  return eff;
}

BufferSpec BufferSpec::infinite() {
  return BufferSpec(false, 0, std::numeric_limits<double>::infinity());
}

BufferSpec BufferSpec::finite(int sections, double m_eff) {
  check(sections >= 2, "BufferSpec: finite buffers need at least 2 sections");
  check(m_eff > 0.0, "BufferSpec: m_eff must be > 0");
  return BufferSpec(true, sections, sections * m_eff);
}

BufferSpec BufferSpec::finite_capacity(double capacity, double m_eff) {
  check(m_eff > 0.0, "BufferSpec: m_eff must be > 0");
  const double ratio = capacity / m_eff;
  const int sections = static_cast<int>(std::lround(ratio));
  check(sections >= 2 && std::fabs(ratio - sections) <= 1e-12 * ratio,
        "BufferSpec: capacity must equal l * m_eff for integer l >= 2");
  return BufferSpec(true, sections, capacity);
}

}  // namespace ehstore
