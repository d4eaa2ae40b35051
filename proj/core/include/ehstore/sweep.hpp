#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ehstore/performance.hpp"
#include "ehstore/sim.hpp"
#include "ehstore/storage.hpp"

namespace ehstore {

/// Config for the sweep drivers. Physical quantities cross this boundary in
/// field units (dBm, dB, uW); everything behind it is SI (joules per slot,
/// linear ratios). Defaults reproduce the built-in measurement profile:
/// effective mean harvest 1e-5 J, mean SNR 24.6 dB, BPSK, 2.1 bits/use,
/// alpha 1.5, beta 0.9, circuit power 0.2 uW.
struct ExperimentConfig {
  // system
  double dl_power = 1.0;              // W
  double rf_dc_efficiency = 0.7;
  double harvest_mean_eff = 1e-5;     // beta * X mean, J per slot
  double snr_bar_db = 24.6;
  double noise_power_dbm = -103.0;
  double pa_inefficiency = 1.5;
  double storage_efficiency = 0.9;
  double circuit_power_uw = 0.2;
  double mod_a = 1.0;
  double mod_b = 2.0;
  double rate_bits = 2.1;

  // sweep
  std::vector<double> delta_grid;      // defaults to 0.1 .. 1.5 step 0.05
  std::vector<int> finite_buffers{4, 7, 20};
  bool include_infinite = false;
  int n_c = 2;

  // simulation
  bool sim_enabled = true;             // false = "analytic-only"
  SimConfig sim;

  // output
  std::string out_dir = ".";
  enum class Format { csv, json, both };
  Format format = Format::both;

  static ExperimentConfig defaults();
  /// Strict parse: unknown keys anywhere are an error.
  static ExperimentConfig from_json_text(const std::string& text);

  LinkParams link() const;
  Imperfections imperfections() const;
  /// Inverts the imperfection map: M = (m_eff - P_C) / alpha, in watts.
  double target_power_from_m_eff(double m_eff) const;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);

/// One (delta, buffer) grid point. buffer_l < 0 encodes the unbounded
/// buffer. Quantities that do not exist at a point (for example p_root for
/// delta <= 1) are NaN and serialize as empty fields.
struct SweepRecord {
  double delta = 0.0;
  int buffer_l = -1;
  double m_eff = 0.0;  // J
  double p_root = 0.0, d_root = 0.0;
  double atom_exact = 0.0, atom_approx = 0.0;
  double p_trans = 0.0, aer_value = 0.0, p_out_channel = 0.0, p_out_total = 0.0;
  std::string status = "ok";

  bool has_sim = false;
  double p_trans_sim = 0, p_trans_ci = 0;
  double aer_sim = 0, aer_ci = 0;
  double p_out_total_sim = 0, p_out_total_ci = 0;
  double atom_sim = 0, atom_ci = 0;
  bool nonstationary = false;
  std::string agree_p_trans, agree_aer, agree_p_out_total, agree_atom;
};

struct OptimizeRecord {
  int buffer_l = -1;
  double delta_star = 0.0;
  double m_star_uw = 0.0;   // target power in uW after inverting imperfections
  double outage_star = 0.0;
  double p_trans_star = 0.0;
  bool high_outage_regime = false;  // outage_star > 0.5
};

std::vector<SweepRecord> run_analyze(const ExperimentConfig& cfg);
std::vector<SweepRecord> run_simulate(const ExperimentConfig& cfg);
std::vector<OptimizeRecord> run_optimize(const ExperimentConfig& cfg);

std::string records_to_csv(const std::vector<SweepRecord>& records,
                           bool with_sim);
std::string records_to_json(const std::vector<SweepRecord>& records,
                            bool with_sim);
std::string optimize_to_csv(const std::vector<OptimizeRecord>& records);
std::string optimize_to_json(const std::vector<OptimizeRecord>& records);

/// Writes name.csv / name.json under cfg.out_dir per cfg.format and returns
/// the list of paths written.
std::vector<std::string> write_outputs(const ExperimentConfig& cfg,
                                       const std::string& name,
                                       const std::string& csv,
                                       const std::string& json_text);

}  // namespace ehstore
