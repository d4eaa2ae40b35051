// Command line front end: analyze | simulate | optimize | validate.
//
// analyze   closed-form metrics over the (delta, buffer) grid
// simulate  analyze columns plus seeded Monte Carlo counterparts
// optimize  outage-minimizing delta per buffer
// validate  cross-validation suite; exit status reflects the outcome

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ehstore/serialize.hpp"
#include "ehstore/sweep.hpp"
#include "ehstore/validate.hpp"

namespace {

ehstore::ExperimentConfig load_config(const std::string& path,
                                      const std::string& out_dir,
                                      const std::string& format,
                                      std::uint64_t seed, bool seed_set,
                                      std::uint64_t slots, bool slots_set) {
  ehstore::ExperimentConfig cfg;
  if (path.empty()) {
    cfg = ehstore::ExperimentConfig::defaults();
  } else {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    cfg = ehstore::ExperimentConfig::from_json_text(ss.str());
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!format.empty()) {
    if (format == "csv")
      cfg.format = ehstore::ExperimentConfig::Format::csv;
    else if (format == "json")
      cfg.format = ehstore::ExperimentConfig::Format::json;
    else if (format == "both")
      cfg.format = ehstore::ExperimentConfig::Format::both;
    else
      throw std::invalid_argument("--format must be csv, json or both");
  }
  if (seed_set) cfg.sim.seed = seed;
  if (slots_set) {
    if (slots == 0) throw std::invalid_argument("--slots must be > 0");
    cfg.sim.n_slots = slots;
  }
  return cfg;
}

void report_written(const std::vector<std::string>& paths) {
  for (const std::string& p : paths) std::cout << "wrote " << p << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stored-energy limiting distributions and link metrics for an "
               "on-off wireless-powered node"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::uint64_t seed = 0, slots = 0;
  bool fast = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (defaults built in)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv|json|both");
    sub->add_option("--seed", seed, "simulation seed override");
    sub->add_option("--slots", slots, "total simulated slots override");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "closed-form sweep");
  CLI::App* simulate = app.add_subcommand("simulate", "sweep with Monte Carlo");
  CLI::App* optimize = app.add_subcommand("optimize", "outage-minimizing delta");
  CLI::App* validate = app.add_subcommand("validate", "run the validation suite");
  add_common(analyze);
  add_common(simulate);
  add_common(optimize);
  add_common(validate);
  validate->add_flag("--fast", fast, "skip the Monte Carlo checks");

  CLI11_PARSE(app, argc, argv);

  try {
    const bool seed_set = seed != 0;
    const bool slots_set = slots != 0;
    if (analyze->parsed()) {
      const auto cfg = load_config(config_path, out_dir, format, seed, seed_set,
                                   slots, slots_set);
      const auto records = ehstore::run_analyze(cfg);
      report_written(ehstore::write_outputs(cfg, "analyze",
                                            ehstore::records_to_csv(records, false),
                                            ehstore::records_to_json(records, false)));
    } else if (simulate->parsed()) {
      const auto cfg = load_config(config_path, out_dir, format, seed, seed_set,
                                   slots, slots_set);
      const auto records = ehstore::run_simulate(cfg);
      report_written(ehstore::write_outputs(cfg, "simulate",
                                            ehstore::records_to_csv(records, true),
                                            ehstore::records_to_json(records, true)));
      std::size_t outside = 0;
      for (const auto& r : records)
        if (r.has_sim &&
            (r.agree_p_trans == "outside" || r.agree_aer == "outside" ||
             r.agree_p_out_total == "outside" || r.agree_atom == "outside"))
          ++outside;
      std::cout << records.size() - outside << "/" << records.size()
                << " grid points agree within 3 CI radii\n";
    } else if (optimize->parsed()) {
      const auto cfg = load_config(config_path, out_dir, format, seed, seed_set,
                                   slots, slots_set);
      const auto records = ehstore::run_optimize(cfg);
      report_written(ehstore::write_outputs(cfg, "optimize",
                                            ehstore::optimize_to_csv(records),
                                            ehstore::optimize_to_json(records)));
      for (const auto& r : records) {
        std::printf("buffer %s: delta* = %.6g, M* = %.6g uW, outage* = %.6g%s\n",
                    r.buffer_l < 0 ? "inf" : std::to_string(r.buffer_l).c_str(),
                    r.delta_star, r.m_star_uw, r.outage_star,
                    r.high_outage_regime ? " (high-outage regime)" : "");
      }
    } else if (validate->parsed()) {
      const auto cfg = load_config(config_path, out_dir, format, seed, seed_set,
                                   slots, slots_set);
      const auto report = ehstore::run_validation(fast, cfg.sim.seed);
      for (const auto& c : report.checks) {
        std::printf("[%s] %-42s measured=%.6g bound=%.6g\n",
                    c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                    c.bound);
      }
      const std::string json_text = ehstore::report_to_json(report);
      if (!out_dir.empty()) {
        ehstore::ExperimentConfig out_cfg = cfg;
        out_cfg.format = ehstore::ExperimentConfig::Format::json;
        report_written(ehstore::write_outputs(out_cfg, "validate", "", json_text));
      }
      if (!report.all_pass()) {
        std::cout << "validation FAILED\n";
        return 1;
      }
      std::cout << "validation passed (" << report.checks.size() << " checks)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
