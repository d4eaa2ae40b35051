#include "ehstore/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "ehstore/special_math.hpp"

namespace ehstore {

namespace {

using nlohmann::json;

constexpr const char* kAnalyzeSchema = "ehstore.analyze.v1";
constexpr const char* kSimulateSchema = "ehstore.simulate.v1";
constexpr const char* kOptimizeSchema = "ehstore.optimize.v1";

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string("config: unknown key '") +
                                  it.key() + "' in " + ctx);
  }
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  for (int i = 2; i <= 30; ++i) cfg.delta_grid.push_back(i / 20.0);
  cfg.sim.n_slots = 1'000'000;
  cfg.sim.n_replications = 8;
  cfg.sim.seed = 20260809;
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ExperimentConfig cfg = defaults();
  const json j = json::parse(text);
  require_keys(j, {"system", "policy_sweep", "buffers", "sim", "output"}, "root");

  if (j.contains("system")) {
    const json& s = j["system"];
    require_keys(s,
                 {"dl_power_W", "rf_dc_efficiency", "harvest_mean_eff_J",
                  "snr_bar_dB", "noise_power_dBm", "pa_inefficiency",
                  "storage_efficiency", "circuit_power_uW", "mod_a", "mod_b",
                  "rate_bits"},
                 "system");
    if (s.contains("dl_power_W")) cfg.dl_power = s["dl_power_W"].get<double>();
    if (s.contains("rf_dc_efficiency"))
      cfg.rf_dc_efficiency = s["rf_dc_efficiency"].get<double>();
    if (s.contains("harvest_mean_eff_J"))
      cfg.harvest_mean_eff = s["harvest_mean_eff_J"].get<double>();
    if (s.contains("snr_bar_dB")) cfg.snr_bar_db = s["snr_bar_dB"].get<double>();
    if (s.contains("noise_power_dBm"))
      cfg.noise_power_dbm = s["noise_power_dBm"].get<double>();
    if (s.contains("pa_inefficiency"))
      cfg.pa_inefficiency = s["pa_inefficiency"].get<double>();
    if (s.contains("storage_efficiency"))
      cfg.storage_efficiency = s["storage_efficiency"].get<double>();
    if (s.contains("circuit_power_uW"))
      cfg.circuit_power_uw = s["circuit_power_uW"].get<double>();
    if (s.contains("mod_a")) cfg.mod_a = s["mod_a"].get<double>();
    if (s.contains("mod_b")) cfg.mod_b = s["mod_b"].get<double>();
    if (s.contains("rate_bits")) cfg.rate_bits = s["rate_bits"].get<double>();
  }

  if (j.contains("policy_sweep")) {
    const json& p = j["policy_sweep"];
    cfg.delta_grid.clear();
    if (p.is_array()) {
      for (const json& v : p) cfg.delta_grid.push_back(v.get<double>());
    } else {
      require_keys(p, {"values", "start", "stop", "step"}, "policy_sweep");
      if (p.contains("values")) {
        for (const json& v : p["values"]) cfg.delta_grid.push_back(v.get<double>());
      } else {
        const double start = p.at("start").get<double>();
        const double stop = p.at("stop").get<double>();
        const double step = p.at("step").get<double>();
        if (!(step > 0.0) || stop < start)
          throw std::invalid_argument("config: bad policy_sweep range");
        for (int i = 0;; ++i) {
          const double d = start + i * step;
          if (d > stop + 0.5 * step) break;
          cfg.delta_grid.push_back(d);
        }
      }
    }
    if (cfg.delta_grid.empty())
      throw std::invalid_argument("config: empty policy_sweep");
    for (double d : cfg.delta_grid)
      if (!(d > 0.0)) throw std::invalid_argument("config: delta values must be > 0");
  }

  if (j.contains("buffers")) {
    cfg.finite_buffers.clear();
    cfg.include_infinite = false;
    for (const json& b : j["buffers"]) {
      if (b.is_string()) {
        if (b.get<std::string>() != "infinite")
          throw std::invalid_argument("config: buffers entries are integers or \"infinite\"");
        cfg.include_infinite = true;
      } else {
        const int l = b.get<int>();
        if (l < 2) throw std::invalid_argument("config: finite buffers need l >= 2");
        cfg.finite_buffers.push_back(l);
      }
    }
  }

  if (j.contains("sim")) {
    const json& s = j["sim"];
    if (s.is_string()) {
      if (s.get<std::string>() != "analytic-only")
        throw std::invalid_argument("config: sim is an object or \"analytic-only\"");
      cfg.sim_enabled = false;
    } else {
      require_keys(s,
                   {"slots", "warmup", "seed", "replications", "histogram_bins",
                    "error_mode", "bits_per_slot"},
                   "sim");
      if (s.contains("slots")) cfg.sim.n_slots = s["slots"].get<std::uint64_t>();
      if (cfg.sim.n_slots == 0)
        throw std::invalid_argument("config: sim.slots must be > 0");
      if (s.contains("warmup")) {
        if (s["warmup"].is_string()) {
          if (s["warmup"].get<std::string>() != "auto")
            throw std::invalid_argument("config: sim.warmup is a count or \"auto\"");
          cfg.sim.warmup_slots = SimConfig::kAutoWarmup;
        } else {
          cfg.sim.warmup_slots = s["warmup"].get<std::uint64_t>();
        }
      }
      if (s.contains("seed")) cfg.sim.seed = s["seed"].get<std::uint64_t>();
      if (s.contains("replications"))
        cfg.sim.n_replications = s["replications"].get<int>();
      if (s.contains("histogram_bins"))
        cfg.sim.histogram_bins = s["histogram_bins"].get<int>();
      if (s.contains("error_mode")) {
        const std::string m = s["error_mode"].get<std::string>();
        if (m == "analytic")
          cfg.sim.error_mode = ErrorCountingMode::analytic_conditional;
        else if (m == "symbol")
          cfg.sim.error_mode = ErrorCountingMode::symbol_level;
        else
          throw std::invalid_argument("config: error_mode is \"analytic\" or \"symbol\"");
      }
      if (s.contains("bits_per_slot"))
        cfg.sim.bits_per_slot = s["bits_per_slot"].get<int>();
    }
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    require_keys(o, {"dir", "format"}, "output");
    if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
    if (o.contains("format")) {
      const std::string f = o["format"].get<std::string>();
      if (f == "csv")
        cfg.format = Format::csv;
      else if (f == "json")
        cfg.format = Format::json;
      else if (f == "both")
        cfg.format = Format::both;
      else
        throw std::invalid_argument("config: format is csv, json or both");
    }
  }
  return cfg;
}

LinkParams ExperimentConfig::link() const {
  return LinkParams::from_snr(db_to_linear(snr_bar_db),
                              dbm_to_watts(noise_power_dbm), harvest_mean_eff,
                              mod_a, mod_b, rate_bits);
}

Imperfections ExperimentConfig::imperfections() const {
  return Imperfections::make(pa_inefficiency, storage_efficiency,
                             circuit_power_uw * 1e-6);
}

double ExperimentConfig::target_power_from_m_eff(double m_eff) const {
  return (m_eff - circuit_power_uw * 1e-6) / pa_inefficiency;
}

namespace {

double root_d(double delta, double m_eff) {
  if (std::fabs(delta - 1.0) < 1e-9) return 0.0;
  const WBranch b = delta <= 1.0 ? WBranch::lower : WBranch::principal;
  return (-delta - lambert_w(b, -delta * std::exp(-delta))) / m_eff;
}

SweepRecord analyze_point(const ExperimentConfig& cfg, const LinkParams& link,
                          double delta, int buffer_l) {
  SweepRecord r;
  r.delta = delta;
  r.buffer_l = buffer_l;
  const EffectiveParams eff = effective_from_delta(delta, cfg.harvest_mean_eff);
  r.m_eff = eff.m_eff;
  r.d_root = root_d(delta, eff.m_eff);
  r.p_root = delta > 1.0
                 ? (-delta - lambert_w(WBranch::principal,
                                       -delta * std::exp(-delta))) /
                       eff.m_eff
                 : std::nan("");
  r.aer_value = aer(link, delta);
  r.p_out_channel = channel_outage(link, delta);

  if (buffer_l < 0) {
    r.atom_exact = std::nan("");
    r.atom_approx = std::nan("");
    r.p_trans = transmission_probability_infinite(delta);
    if (delta <= 1.0) r.status = "no_stationary_distribution";
  } else {
    try {
      const BufferSpec buf = BufferSpec::finite(buffer_l, eff.m_eff);
      const FiniteExactDist exact = finite_exact(eff, buf);
      r.atom_exact = exact.atom();
      if (buffer_l >= 3) {
        const FiniteApproxDist approx = finite_approx(eff, buf, cfg.n_c);
        r.atom_approx = approx.atom();
        r.p_trans = transmission_probability(approx);
      } else {
        r.atom_approx = std::nan("");
        r.p_trans = transmission_probability(exact);
      }
    } catch (const NumericInstabilityError& e) {
      r.status = e.what();
      r.atom_exact = r.atom_approx = r.p_trans = r.p_out_total = std::nan("");
      return r;
    }
  }
  r.p_out_total = total_outage(r.p_trans, r.p_out_channel);
  return r;
}

// 3 CI radii plus the counting resolution floor: with n counted slots an
// event probability below ~3/n is indistinguishable from zero (and a
// frequency of exactly 1 has zero replication variance), so the flag must
// not fire inside that resolution.
const char* within(double sim, double ref, double ci, std::uint64_t n) {
  const double floor = n > 0 ? 3.0 / static_cast<double>(n) : 0.0;
  return std::fabs(sim - ref) <= 3.0 * ci + floor ? "within" : "outside";
}

void simulate_point(const ExperimentConfig& cfg, const LinkParams& link,
                    SweepRecord& r) {
  if (r.status != "ok" && r.status != "no_stationary_distribution") return;
  const EffectiveParams eff = effective_from_delta(r.delta, cfg.harvest_mean_eff);
  const BufferSpec buf = r.buffer_l < 0 ? BufferSpec::infinite()
                                        : BufferSpec::finite(r.buffer_l, eff.m_eff);
  const SimResult sim = simulate(eff, buf, link, cfg.sim);
  const std::uint64_t n = sim.slots_counted;
  r.has_sim = true;
  r.nonstationary = sim.nonstationary;
  r.p_trans_sim = sim.p_trans.value;
  r.p_trans_ci = sim.p_trans.ci_radius;
  r.aer_sim = sim.aer.value;
  r.aer_ci = sim.aer.ci_radius;
  r.p_out_total_sim = sim.total_outage.value;
  r.p_out_total_ci = sim.total_outage.ci_radius;
  r.agree_p_trans = within(r.p_trans_sim, r.p_trans, r.p_trans_ci, n);
  r.agree_aer = within(r.aer_sim, r.aer_value, r.aer_ci, n);
  r.agree_p_out_total =
      within(r.p_out_total_sim, r.p_out_total, r.p_out_total_ci, n);
  if (r.buffer_l >= 0) {
    r.atom_sim = sim.atom_freq;
    r.atom_ci = sim.atom_ci_radius;
    r.agree_atom = within(r.atom_sim, r.atom_exact, r.atom_ci, n);
  } else {
    r.atom_sim = std::nan("");
    r.atom_ci = std::nan("");
  }
}

}  // namespace

std::vector<SweepRecord> run_analyze(const ExperimentConfig& cfg) {
  const LinkParams link = cfg.link();
  std::vector<SweepRecord> records;
  for (double delta : cfg.delta_grid) {
    for (int l : cfg.finite_buffers)
      records.push_back(analyze_point(cfg, link, delta, l));
    if (cfg.include_infinite)
      records.push_back(analyze_point(cfg, link, delta, -1));
  }
  return records;
}

std::vector<SweepRecord> run_simulate(const ExperimentConfig& cfg) {
  if (!cfg.sim_enabled)
    throw std::invalid_argument("simulate requested but config says analytic-only");
  const LinkParams link = cfg.link();
  std::vector<SweepRecord> records = run_analyze(cfg);

  // worker pool over grid points; records are written by index, so the
  // output is independent of scheduling
  std::atomic<std::size_t> next{0};
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(records.size())));
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (unsigned w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= records.size()) return;
        try {
          simulate_point(cfg, link, records[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return records;
}

std::vector<OptimizeRecord> run_optimize(const ExperimentConfig& cfg) {
  const LinkParams link = cfg.link();
  std::vector<OptimizeRecord> out;
  auto add = [&](const BufferSpec& buf, int l) {
    const DeltaOpt opt = optimal_delta(buf, cfg.harvest_mean_eff, link,
                                       cfg.delta_grid, cfg.n_c);
    OptimizeRecord r;
    r.buffer_l = l;
    r.delta_star = opt.delta_star;
    r.outage_star = opt.outage_star;
    r.p_trans_star = opt.p_trans_star;
    r.m_star_uw =
        cfg.target_power_from_m_eff(opt.delta_star * cfg.harvest_mean_eff) * 1e6;
    r.high_outage_regime = opt.outage_star > 0.5;
    out.push_back(r);
  };
  for (int l : cfg.finite_buffers)
    add(BufferSpec::finite(l, cfg.harvest_mean_eff), l);
  if (cfg.include_infinite) add(BufferSpec::infinite(), -1);
  return out;
}

namespace {

std::string buffer_label(int l) { return l < 0 ? "inf" : std::to_string(l); }

}  // namespace

std::string records_to_csv(const std::vector<SweepRecord>& records,
                           bool with_sim) {
  std::string out = std::string("# schema: ") +
                    (with_sim ? kSimulateSchema : kAnalyzeSchema) + "\n";
  out +=
      "delta_tilde,buffer_l,m_eff_uW,p_root,d_root,atom_exact,atom_approx,"
      "p_trans,aer,p_out_channel,p_out_total,status";
  if (with_sim)
    out +=
        ",p_trans_sim,p_trans_ci,aer_sim,aer_ci,p_out_total_sim,p_out_total_ci,"
        "atom_sim,atom_ci,nonstationary,agree_p_trans,agree_aer,"
        "agree_p_out_total,agree_atom";
  out += "\n";
  for (const SweepRecord& r : records) {
    out += fmt(r.delta) + "," + buffer_label(r.buffer_l) + "," +
           fmt(r.m_eff * 1e6) + "," + fmt(r.p_root) + "," + fmt(r.d_root) + "," +
           fmt(r.atom_exact) + "," + fmt(r.atom_approx) + "," + fmt(r.p_trans) +
           "," + fmt(r.aer_value) + "," + fmt(r.p_out_channel) + "," +
           fmt(r.p_out_total) + "," + r.status;
    if (with_sim) {
      out += "," + fmt(r.p_trans_sim) + "," + fmt(r.p_trans_ci) + "," +
             fmt(r.aer_sim) + "," + fmt(r.aer_ci) + "," + fmt(r.p_out_total_sim) +
             "," + fmt(r.p_out_total_ci) + "," + fmt(r.atom_sim) + "," +
             fmt(r.atom_ci) + "," + (r.nonstationary ? "1" : "0") + "," +
             r.agree_p_trans + "," + r.agree_aer + "," + r.agree_p_out_total +
             "," + r.agree_atom;
    }
    out += "\n";
  }
  return out;
}

std::string records_to_json(const std::vector<SweepRecord>& records,
                            bool with_sim) {
  json root;
  root["schema"] = with_sim ? kSimulateSchema : kAnalyzeSchema;
  json rows = json::array();
  auto opt = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  for (const SweepRecord& r : records) {
    json row;
    row["delta_tilde"] = r.delta;
    row["buffer_l"] = r.buffer_l < 0 ? json("inf") : json(r.buffer_l);
    row["m_eff_uW"] = r.m_eff * 1e6;
    row["p_root"] = opt(r.p_root);
    row["d_root"] = opt(r.d_root);
    row["atom_exact"] = opt(r.atom_exact);
    row["atom_approx"] = opt(r.atom_approx);
    row["p_trans"] = opt(r.p_trans);
    row["aer"] = opt(r.aer_value);
    row["p_out_channel"] = opt(r.p_out_channel);
    row["p_out_total"] = opt(r.p_out_total);
    row["status"] = r.status;
    if (with_sim && r.has_sim) {
      row["sim"] = {{"p_trans", r.p_trans_sim},
                    {"p_trans_ci", r.p_trans_ci},
                    {"aer", r.aer_sim},
                    {"aer_ci", r.aer_ci},
                    {"p_out_total", r.p_out_total_sim},
                    {"p_out_total_ci", r.p_out_total_ci},
                    {"atom", opt(r.atom_sim)},
                    {"atom_ci", opt(r.atom_ci)},
                    {"nonstationary", r.nonstationary},
                    {"agree_p_trans", r.agree_p_trans},
                    {"agree_aer", r.agree_aer},
                    {"agree_p_out_total", r.agree_p_out_total},
                    {"agree_atom", r.agree_atom}};
    }
    rows.push_back(std::move(row));
  }
  root["records"] = std::move(rows);
  return root.dump(2);
}

std::string optimize_to_csv(const std::vector<OptimizeRecord>& records) {
  std::string out = std::string("# schema: ") + kOptimizeSchema + "\n";
  out += "buffer_l,delta_star,m_star_uW,outage_star,p_trans_star,high_outage_regime\n";
  for (const OptimizeRecord& r : records) {
    out += buffer_label(r.buffer_l) + "," + fmt(r.delta_star) + "," +
           fmt(r.m_star_uw) + "," + fmt(r.outage_star) + "," +
           fmt(r.p_trans_star) + "," + (r.high_outage_regime ? "1" : "0") + "\n";
  }
  return out;
}

std::string optimize_to_json(const std::vector<OptimizeRecord>& records) {
  json root;
  root["schema"] = kOptimizeSchema;
  json rows = json::array();
  for (const OptimizeRecord& r : records) {
    rows.push_back({{"buffer_l", r.buffer_l < 0 ? json("inf") : json(r.buffer_l)},
                    {"delta_star", r.delta_star},
                    {"m_star_uW", r.m_star_uw},
                    {"outage_star", r.outage_star},
                    {"p_trans_star", r.p_trans_star},
                    {"high_outage_regime", r.high_outage_regime}});
  }
  root["records"] = std::move(rows);
  return root.dump(2);
}

std::vector<std::string> write_outputs(const ExperimentConfig& cfg,
                                       const std::string& name,
                                       const std::string& csv,
                                       const std::string& json_text) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
    written.push_back(path);
  };
  const std::string base = (fs::path(cfg.out_dir) / name).string();
  if (cfg.format != ExperimentConfig::Format::json) write(base + ".csv", csv);
  if (cfg.format != ExperimentConfig::Format::csv)
    write(base + ".json", json_text);
  return written;
}

}  // namespace ehstore
