#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ehstore/serialize.hpp"

using namespace ehstore;

namespace {

void check_pdf_bitwise_equal(const LimitingDistribution& a,
                             const LimitingDistribution& b) {
  std::mt19937_64 gen(123);
  const double hi = std::isfinite(support_upper(a)) ? support_upper(a)
                                                    : 20.0;
  std::uniform_real_distribution<double> ux(0.0, hi * (1.0 - 1e-12));
  for (int i = 0; i < 200; ++i) {
    const double x = ux(gen);
    CHECK(pdf_eval(a, x) == pdf_eval(b, x));
    CHECK(cdf_eval(a, x) == cdf_eval(b, x));
  }
  CHECK(atom_mass(a) == atom_mass(b));
}

}  // namespace

TEST_CASE("infinite distribution round-trips losslessly") {
  const LimitingDistribution d = infinite_pdf(effective_from_delta(1.31, 0.73e-5));
  const std::string text = dist_to_json(d);
  const LimitingDistribution back = dist_from_json(text);
  REQUIRE(std::holds_alternative<InfiniteBufferDist>(back));
  const auto& a = std::get<InfiniteBufferDist>(d);
  const auto& b = std::get<InfiniteBufferDist>(back);
  CHECK(a.p() == b.p());
  CHECK(a.rate() == b.rate());
  CHECK(a.m_eff() == b.m_eff());
  check_pdf_bitwise_equal(d, back);
}

TEST_CASE("finite exact round-trips losslessly, including a perturbed atom") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ud(0.3, 1.6);
  std::uniform_int_distribution<int> ul(2, 12);
  for (int trial = 0; trial < 10; ++trial) {
    const double delta = ud(gen);
    const int l = ul(gen);
    const EffectiveParams eff = effective_from_delta(delta, 1e-5);
    const FiniteExactDist ex = finite_exact(eff, BufferSpec::finite(l, eff.m_eff));
    const LimitingDistribution d = ex;
    const LimitingDistribution back = dist_from_json(dist_to_json(d));
    check_pdf_bitwise_equal(d, back);
  }
  const EffectiveParams eff = effective_from_delta(0.9, 1e-5);
  const FiniteExactDist ex = finite_exact(eff, BufferSpec::finite(4, eff.m_eff));
  const LimitingDistribution mutant = ex.perturbed_atom(0.03);
  check_pdf_bitwise_equal(mutant, dist_from_json(dist_to_json(mutant)));
}

TEST_CASE("finite approx round-trips losslessly") {
  const EffectiveParams eff = effective_from_delta(0.965, 1e-5);
  const LimitingDistribution d =
      finite_approx(eff, BufferSpec::finite(7, eff.m_eff), 3);
  const LimitingDistribution back = dist_from_json(dist_to_json(d));
  REQUIRE(std::holds_alternative<FiniteApproxDist>(back));
  const auto& a = std::get<FiniteApproxDist>(d);
  const auto& b = std::get<FiniteApproxDist>(back);
  CHECK(a.d() == b.d());
  CHECK(a.c() == b.c());
  CHECK(a.sigma1() == b.sigma1());
  CHECK(a.sigma2() == b.sigma2());
  CHECK(a.tail_sections() == b.tail_sections());
  check_pdf_bitwise_equal(d, back);
}

TEST_CASE("distribution JSON carries the documented structure") {
  const EffectiveParams eff = effective_from_delta(1.2, 1e-5);
  const LimitingDistribution d =
      finite_exact(eff, BufferSpec::finite(3, eff.m_eff));
  const std::string text = dist_to_json(d);
  CHECK(text.find("\"kind\"") != std::string::npos);
  CHECK(text.find("finite_exact") != std::string::npos);
  CHECK(text.find("\"params\"") != std::string::npos);
  CHECK(text.find("\"sections\"") != std::string::npos);
  CHECK(text.find("\"formula_id\"") != std::string::npos);
  CHECK(text.find("\"coefficients\"") != std::string::npos);
  CHECK_THROWS(dist_from_json("{\"kind\": \"nope\", \"params\": {\"lambda\": 1, \"m_eff\": 1}}"));
}

TEST_CASE("sim result JSON and histogram CSV") {
  const EffectiveParams eff = effective_from_delta(0.8, 1e-5);
  const BufferSpec buf = BufferSpec::finite(3, eff.m_eff);
  const LinkParams link = LinkParams::from_snr(288.4, 5.01e-14, 1e-5, 1, 2, 2.1);
  SimConfig cfg;
  cfg.n_slots = 50'000;
  cfg.n_replications = 2;
  cfg.seed = 8;
  cfg.histogram_bins = 20;
  const SimResult r = simulate(eff, buf, link, cfg);
  const std::string j = sim_result_to_json(r);
  for (const char* key : {"\"p_trans\"", "\"aer\"", "\"channel_outage\"",
                          "\"total_outage\"", "\"atom_freq\"", "\"histogram\"",
                          "\"slots_counted\"", "\"replications\""}) {
    CAPTURE(key);
    CHECK(j.find(key) != std::string::npos);
  }
  const std::string csv = histogram_to_csv(r.buffer_histogram);
  CHECK(csv.rfind("bin_center,mass\n", 0) == 0);
  // header plus one line per bin
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
}
