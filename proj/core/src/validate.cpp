#include "ehstore/validate.hpp"

#include <cmath>

#include <json.hpp>

#include "ehstore/limiting_dist.hpp"
#include "ehstore/performance.hpp"
#include "ehstore/quadrature.hpp"
#include "ehstore/sim.hpp"
#include "ehstore/special_math.hpp"
#include "ehstore/sweep.hpp"

namespace ehstore {

bool ValidationReport::all_pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

void check_max(ValidationReport& rep, const std::string& name, double measured,
               double bound, const std::string& note = "") {
  rep.checks.push_back({name, measured <= bound, measured, bound, note});
}

void check_min(ValidationReport& rep, const std::string& name, double measured,
               double bound, const std::string& note = "") {
  rep.checks.push_back({name, measured >= bound, measured, bound, note});
}

void check_true(ValidationReport& rep, const std::string& name, bool ok,
                const std::string& note = "") {
  rep.checks.push_back({name, ok, ok ? 1.0 : 0.0, 1.0, note});
}

std::vector<double> interior_points(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * (i + 0.5) / n;
  return xs;
}

double mass_by_quadrature(const LimitingDistribution& dist) {
  const double upper = support_upper(dist);
  const std::vector<double> bps = section_breakpoints(dist);
  double hi = upper;
  if (!std::isfinite(upper)) {
    const auto& inf = std::get<InfiniteBufferDist>(dist);
    hi = inf.m_eff() + std::log(1e16) / (-inf.p());
  }
  const double mass = integrate_split(
      [&dist](double x) { return pdf_eval(dist, x); }, 0.0, hi, bps);
  return mass + atom_mass(dist);
}

void special_math_checks(ValidationReport& rep) {
  double worst = 0.0;
  for (double z : {-0.367, -0.25, -0.05, 0.0, 0.5, 2.718281828459045, 100.0, 1e8}) {
    const double w = lambert_w(WBranch::principal, z);
    worst = std::fmax(worst,
                      std::fabs(w * std::exp(w) - z) / std::fmax(1.0, std::fabs(z)));
  }
  for (double z : {-0.367, -0.3, -0.1, -1e-4}) {
    const double w = lambert_w(WBranch::lower, z);
    worst = std::fmax(worst,
                      std::fabs(w * std::exp(w) - z) / std::fmax(1.0, std::fabs(z)));
  }
  check_max(rep, "lambert_w.residual", worst, 1e-13);

  double worst_id = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double delta = i / 40.0;  // (0, 1]
    const double w = lambert_w(WBranch::principal, -delta * std::exp(-delta));
    worst_id = std::fmax(worst_id, std::fabs(w + delta));
  }
  for (int i = 1; i <= 40; ++i) {
    const double delta = 1.0 + i / 8.0;  // (1, 6]
    const double w = lambert_w(WBranch::lower, -delta * std::exp(-delta));
    worst_id = std::fmax(worst_id, std::fabs(-w - delta));
  }
  check_max(rep, "lambert_w.conjugate_identity", worst_id, 1e-12);

  double worst_g = 0.0;
  for (int s : {1, 3, 7, 12, 20}) {
    for (double x : {-20.0, -5.0, -0.5, 0.0, 1.5, 10.0}) {
      const double v = upper_incomplete_gamma_int(s, x);
      double oracle;
      if (x >= 0.0) {
        oracle = integrate_value(
            [s](double t) { return std::pow(t, s - 1) * std::exp(-t); }, x,
            x + 60.0 + 10.0 * s, 1e-13);
      } else {
        oracle = integrate_value(
                     [s](double t) { return std::pow(t, s - 1) * std::exp(-t); },
                     x, 0.0, 1e-13) +
                 upper_incomplete_gamma_int(s, 0.0);
      }
      worst_g = std::fmax(worst_g, std::fabs(v - oracle) / std::fabs(oracle));
    }
  }
  check_max(rep, "incomplete_gamma.quadrature_oracle", worst_g, 1e-9);

  check_max(rep, "gaussian_q.half_at_zero", std::fabs(gaussian_q(0.0) - 0.5), 1e-16);
  check_max(rep, "r_series.two_term",
            std::fabs(r_series(0.0, 1, 1.0) - (1.0 + std::exp(-1.0))), 1e-15);
}

void distribution_checks(ValidationReport& rep) {
  // unit area across the parameter grid
  double worst_exact = 0.0, worst_approx = 0.0;
  for (double delta : {0.5, 0.8, 0.965, 1.0, 1.2}) {
    for (int l : {2, 3, 4, 7, 20}) {
      const EffectiveParams eff = effective_from_delta(delta, 1e-5);
      const BufferSpec buf = BufferSpec::finite(l, eff.m_eff);
      worst_exact = std::fmax(
          worst_exact,
          std::fabs(mass_by_quadrature(finite_exact(eff, buf)) - 1.0));
      if (l >= 3)
        worst_approx = std::fmax(
            worst_approx,
            std::fabs(mass_by_quadrature(finite_approx(eff, buf, 2)) - 1.0));
    }
  }
  check_max(rep, "unit_area.finite_exact", worst_exact, 1e-9);
  check_max(rep, "unit_area.finite_approx", worst_approx, 1e-9);
  {
    const EffectiveParams eff = effective_from_delta(2.0, 1.0);
    check_max(rep, "unit_area.infinite",
              std::fabs(mass_by_quadrature(infinite_pdf(eff)) - 1.0), 1e-9);
  }

  // residuals of the stationarity equations
  {
    const EffectiveParams eff = effective_from_delta(0.8, 1.0);
    const FiniteExactDist d = finite_exact(eff, BufferSpec::finite(3, eff.m_eff));
    const std::vector<double> xs = interior_points(0.0, d.capacity(), 200);
    check_max(rep, "integral_residual.finite", integral_residual(d, xs), 1e-7);
    check_min(rep, "integral_residual.detects_perturbation",
              integral_residual(d.perturbed_atom(0.01), xs), 1e-3,
              "atom +1% must not satisfy the equations");
  }
  {
    const EffectiveParams eff = effective_from_delta(1.5, 1.0);
    const InfiniteBufferDist d = infinite_pdf(eff);
    const std::vector<double> xs = interior_points(0.0, 10.0 * d.m_eff(), 200);
    check_max(rep, "integral_residual.infinite", integral_residual(d, xs), 1e-7);
  }

  // approximation error bounds on [0, M]
  for (const auto& [l, bound] : {std::pair<int, double>{3, 0.083},
                                 std::pair<int, double>{4, 0.0164}}) {
    double worst = 0.0;
    for (int i = 5; i <= 15; ++i) {
      const double delta = i / 10.0;
      const EffectiveParams eff = effective_from_delta(delta, 1.0);
      const BufferSpec buf = BufferSpec::finite(l, eff.m_eff);
      const FiniteExactDist ex = finite_exact(eff, buf);
      const FiniteApproxDist ap = finite_approx(eff, buf, 2);
      for (int k = 1; k <= 60; ++k) {
        const double x = eff.m_eff * (k / 60.0);
        worst = std::fmax(worst,
                          std::fabs(approx_error(ex, ap, x) / ex.pdf(x)));
      }
    }
    check_max(rep, "approx_error.bound_l" + std::to_string(l), worst, bound);
  }

  // the error formula reproduces exact minus approx pointwise
  {
    const EffectiveParams eff = effective_from_delta(0.8, 1.0);
    const BufferSpec buf = BufferSpec::finite(4, eff.m_eff);
    const FiniteExactDist ex = finite_exact(eff, buf);
    const FiniteApproxDist ap = finite_approx(eff, buf, 2);
    double worst = 0.0;
    for (int k = 0; k <= 50; ++k) {
      const double x = eff.m_eff * (k / 50.0);
      worst = std::fmax(worst, std::fabs(approx_error(ex, ap, x) -
                                         (ex.pdf(x) - ap.pdf(x))));
    }
    check_max(rep, "approx_error.pointwise_match", worst, 1e-10);
  }

  // convergence to the unbounded-buffer law
  {
    const std::vector<int> ls{4, 8, 16, 32};
    const auto rows = asymptotic_infinite_limit_check(1.2, ls);
    bool decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].sup_error >= rows[i - 1].sup_error) decreasing = false;
      if (rows[i].atom >= rows[i - 1].atom) decreasing = false;
    }
    check_true(rep, "asymptotic.sup_error_decreasing", decreasing);
    check_max(rep, "asymptotic.l32_close", rows.back().sup_error, 1e-3);
  }
}

void monte_carlo_checks(ValidationReport& rep, std::uint64_t seed) {
  const ExperimentConfig cfg = ExperimentConfig::defaults();
  const LinkParams link = cfg.link();

  double worst_sigmas = 0.0;
  for (double delta : {0.5, 0.8, 0.965, 1.2}) {
    for (int l : {3, 4, 7, 20}) {
      const EffectiveParams eff = effective_from_delta(delta, cfg.harvest_mean_eff);
      const BufferSpec buf = BufferSpec::finite(l, eff.m_eff);
      const FiniteExactDist ex = finite_exact(eff, buf);
      SimConfig sc;
      sc.n_slots = 400'000;
      sc.n_replications = 8;
      sc.seed = seed;
      const SimResult sim = simulate(eff, buf, link, sc);
      auto sigmas = [](double v, double ref, double ci) {
        return ci > 0 ? std::fabs(v - ref) / ci : 0.0;
      };
      worst_sigmas = std::fmax(
          worst_sigmas,
          sigmas(sim.p_trans.value, transmission_probability(ex), sim.p_trans.ci_radius));
      worst_sigmas = std::fmax(
          worst_sigmas, sigmas(sim.atom_freq, ex.atom(), sim.atom_ci_radius));
      worst_sigmas = std::fmax(
          worst_sigmas, sigmas(sim.aer.value, aer(link, delta), sim.aer.ci_radius));
      worst_sigmas = std::fmax(
          worst_sigmas,
          sigmas(sim.total_outage.value,
                 total_outage(transmission_probability(ex), channel_outage(link, delta)),
                 sim.total_outage.ci_radius));
    }
  }
  check_max(rep, "mc.oracle_agreement_sigmas", worst_sigmas, 3.0,
            "worst deviation over the grid, in CI radii");

  // distribution distance plus its mutation probe
  {
    const EffectiveParams eff = effective_from_delta(1.2, cfg.harvest_mean_eff);
    const BufferSpec buf = BufferSpec::finite(4, eff.m_eff);
    const FiniteExactDist ex = finite_exact(eff, buf);
    SimConfig sc;
    sc.n_slots = 2'000'000;
    sc.n_replications = 4;
    sc.seed = seed;
    const SimResult sim = simulate(eff, buf, link, sc);
    const DistributionDistance good = distribution_distance(sim, ex);
    check_max(rep, "mc.sup_cdf", good.sup_cdf, 5e-3);
    const DistributionDistance bad =
        distribution_distance(sim, ex.perturbed_atom(0.05));
    check_min(rep, "mc.sup_cdf_detects_perturbation", bad.sup_cdf, 4e-2,
              "atom +5% must be visibly wrong");
  }
}

}  // namespace

ValidationReport run_validation(bool fast, std::uint64_t seed) {
  ValidationReport rep;
  special_math_checks(rep);
  distribution_checks(rep);
  if (!fast) monte_carlo_checks(rep, seed);
  return rep;
}

std::string report_to_json(const ValidationReport& report) {
  nlohmann::json j;
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"measured", c.measured},
                      {"bound", c.bound},
                      {"note", c.note}});
  }
  j["checks"] = std::move(checks);
  j["all_pass"] = report.all_pass();
  return j.dump(2);
}

}  // namespace ehstore
