#include "ehstore/serialize.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace ehstore {

namespace {

using nlohmann::json;

json section(double lo, double hi, const char* formula,
             std::vector<double> coeffs) {
  json s;
  s["x_lo"] = lo;
  if (std::isfinite(hi))
    s["x_hi"] = hi;
  else
    s["x_hi"] = nullptr;
  s["formula_id"] = formula;
  s["coefficients"] = std::move(coeffs);
  return s;
}

json to_json_impl(const InfiniteBufferDist& d) {
  json j;
  j["kind"] = "infinite";
  j["params"] = {{"lambda", d.rate()},
                 {"m_eff", d.m_eff()},
                 {"delta", d.delta()},
                 {"p", d.p()}};
  const double k = -d.p() / (d.delta() * std::exp(d.p() * d.m_eff()));
  j["sections"] = json::array(
      {section(0.0, d.m_eff(), "rise_one_minus_exp", {1.0 / d.m_eff(), d.p()}),
       section(d.m_eff(), std::numeric_limits<double>::infinity(), "exp_tail",
               {k, d.p()})});
  return j;
}

json to_json_impl(const FiniteExactDist& d) {
  json j;
  j["kind"] = "finite_exact";
  j["params"] = {{"lambda", d.rate()}, {"m_eff", d.m_eff()},
                 {"delta", d.delta()}, {"K", d.capacity()},
                 {"l", d.sections()},  {"atom", d.atom()}};
  json secs = json::array();
  {
    // bottom piece: prefactor atom*lambda*e^{delta(l-1)} then z^q/q!
    std::vector<double> coeffs;
    coeffs.push_back(d.atom() * d.rate() * std::exp(d.delta() * (d.sections() - 1)));
    const double z = d.delta() * std::exp(-d.delta());
    double zq = 1.0;
    for (int q = 0; q <= d.sections() - 2; ++q) {
      if (q > 0) zq *= z / q;
      coeffs.push_back(zq);
    }
    secs.push_back(section(0.0, d.m_eff(), "bottom_series", std::move(coeffs)));
  }
  for (int n = d.sections() - 2; n >= 0; --n) {
    // top section n: prefactor atom*lambda then e^{-delta q}/(q-1)!
    std::vector<double> coeffs;
    coeffs.push_back(d.atom() * d.rate());
    double c = 1.0;
    for (int q = 1; q <= n; ++q) {
      c *= (q == 1) ? std::exp(-d.delta()) : std::exp(-d.delta()) / (q - 1);
      coeffs.push_back(c);
    }
    secs.push_back(section(d.capacity() - (n + 1) * d.m_eff(),
                           d.capacity() - n * d.m_eff(), "top_section",
                           std::move(coeffs)));
  }
  j["sections"] = std::move(secs);
  return j;
}

json to_json_impl(const FiniteApproxDist& d) {
  json j;
  j["kind"] = "finite_approx";
  j["params"] = {{"lambda", d.rate()},   {"m_eff", d.m_eff()},
                 {"delta", d.delta()},   {"K", d.capacity()},
                 {"l", d.sections()},    {"n_c", d.tail_sections()},
                 {"d", d.d()},           {"c", d.c()},
                 {"sigma1", d.sigma1()}, {"sigma2", d.sigma2()},
                 {"atom", d.atom()}};
  json secs = json::array();
  secs.push_back(section(0.0, d.m_eff(), "approx_bottom", {d.c(), d.d()}));
  const double tail_lo = d.capacity() - d.tail_sections() * d.m_eff();
  if (tail_lo > d.m_eff())
    secs.push_back(section(d.m_eff(), tail_lo, "approx_exp", {d.c(), d.d()}));
  for (int n = d.tail_sections() - 1; n >= 0; --n) {
    std::vector<double> coeffs;
    coeffs.push_back(d.atom() * d.rate());
    double c = 1.0;
    for (int q = 1; q <= n; ++q) {
      c *= (q == 1) ? std::exp(-d.delta()) : std::exp(-d.delta()) / (q - 1);
      coeffs.push_back(c);
    }
    secs.push_back(section(d.capacity() - (n + 1) * d.m_eff(),
                           d.capacity() - n * d.m_eff(), "top_section_scaled",
                           std::move(coeffs)));
  }
  j["sections"] = std::move(secs);
  return j;
}

}  // namespace

std::string dist_to_json(const LimitingDistribution& dist) {
  const json j = std::visit([](const auto& d) { return to_json_impl(d); }, dist);
  return j.dump(2);
}

LimitingDistribution dist_from_json(const std::string& text) {
  const json j = json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  const json& p = j.at("params");
  const double lambda = p.at("lambda").get<double>();
  const double m_eff = p.at("m_eff").get<double>();
  if (kind == "infinite") {
    return InfiniteBufferDist::from_state(m_eff, lambda, p.at("p").get<double>());
  }
  if (kind == "finite_exact") {
    return FiniteExactDist::from_state(m_eff, lambda, p.at("l").get<int>(),
                                       p.at("atom").get<double>());
  }
  if (kind == "finite_approx") {
    return FiniteApproxDist::from_state(m_eff, lambda, p.at("l").get<int>(),
                                        p.at("n_c").get<int>(),
                                        p.at("atom").get<double>());
  }
  throw std::invalid_argument("dist_from_json: unknown kind '" + kind + "'");
}

std::string sim_result_to_json(const SimResult& r) {
  json j;
  auto ci = [](const CiEstimate& e) {
    return json{{"value", e.value}, {"ci_radius", e.ci_radius}};
  };
  j["p_trans"] = ci(r.p_trans);
  j["aer"] = ci(r.aer);
  j["channel_outage"] = ci(r.channel_outage);
  j["total_outage"] = ci(r.total_outage);
  j["atom_freq"] = r.atom_freq;
  j["atom_ci_radius"] = r.atom_ci_radius;
  j["slots_counted"] = r.slots_counted;
  j["nonstationary"] = r.nonstationary;
  j["histogram"] = {{"edges", r.buffer_histogram.edges},
                    {"masses", r.buffer_histogram.masses}};
  json reps = json::array();
  for (const ReplicationSummary& s : r.replications) {
    reps.push_back({{"p_trans", s.p_trans},
                    {"aer", s.aer},
                    {"channel_outage", s.channel_outage},
                    {"total_outage", s.total_outage},
                    {"atom_freq", s.atom_freq},
                    {"slots", s.slots}});
  }
  j["replications"] = std::move(reps);
  return j.dump(2);
}

std::string histogram_to_csv(const Histogram& h) {
  std::string out = "bin_center,mass\n";
  char buf[64];
  for (std::size_t i = 0; i < h.masses.size(); ++i) {
    const double center = 0.5 * (h.edges[i] + h.edges[i + 1]);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", center, h.masses[i]);
    out += buf;
  }
  return out;
}

}  // namespace ehstore
