#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace ehstore {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule.
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGk15WeightsG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gk15(F& f, double a, double b, double& value, double& error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double result_g = fc * kGk15WeightsG[3];
  double result_k = fc * kGk15WeightsK[7];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    const double fsum = f(center - dx) + f(center + dx);
    result_k += fsum * kGk15WeightsK[i];
    if (i % 2 == 1) result_g += fsum * kGk15WeightsG[i / 2];
  }
  value = result_k * half;
  error = std::fabs((result_k - result_g) * half);
}

template <typename F>
void adapt(F& f, double a, double b, double tol, int depth, int max_subdiv,
           QuadResult& out) {
  double v, e;
  gk15(f, a, b, v, e);
  if (e <= tol || depth > 60 || out.subdivisions >= max_subdiv) {
    out.value += v;
    out.error += e;
    return;
  }
  ++out.subdivisions;
  const double m = 0.5 * (a + b);
  adapt(f, a, m, 0.5 * tol, depth + 1, max_subdiv, out);
  adapt(f, m, b, 0.5 * tol, depth + 1, max_subdiv, out);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b].
template <typename F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-11,
                     int max_subdiv = 20000) {
  QuadResult out;
  if (a == b) return out;
  detail::adapt(f, a, b, abs_tol, 0, max_subdiv, out);
  return out;
}

template <typename F>
double integrate_value(F&& f, double a, double b, double abs_tol = 1e-11,
                       int max_subdiv = 20000) {
  return integrate(static_cast<F&&>(f), a, b, abs_tol, max_subdiv).value;
}

/// Integrates over [a, b] split at the interior breakpoints, so piecewise
/// integrands are never sampled across a kink or a jump.
template <typename F>
double integrate_split(F&& f, double a, double b,
                       std::span<const double> breakpoints,
                       double abs_tol = 1e-11) {
  std::vector<double> cuts;
  cuts.push_back(a);
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i])
      total += integrate(f, cuts[i], cuts[i + 1], abs_tol).value;
  }
  return total;
}

}  // namespace ehstore
