#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ehstore/quadrature.hpp"
#include "ehstore/special_math.hpp"

#ifdef EHSTORE_HAVE_BOOST_RATIONAL
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#endif

using namespace ehstore;

namespace {

double residual(double w, double z) {
  return std::fabs(w * std::exp(w) - z) / std::fmax(1.0, std::fabs(z));
}

}  // namespace

TEST_CASE("lambert_w pinned values") {
  CHECK(lambert_w(WBranch::principal, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(lambert_w(WBranch::principal, std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lambert_w(WBranch::lower, -std::exp(-1.0)) == doctest::Approx(-1.0).epsilon(1e-12));
  const double z = -0.8 * std::exp(-0.8);
  CHECK(lambert_w(WBranch::principal, z) == doctest::Approx(-0.8).epsilon(1e-13));
}

TEST_CASE("lambert_w residual over both branch domains") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    // principal: z in [-1/e, 1e6], skewed toward the branch point
    double z;
    if (i % 3 == 0)
      z = -std::exp(-1.0) + u(gen) * 1e-5;
    else if (i % 3 == 1)
      z = -std::exp(-1.0) + u(gen) * (std::exp(-1.0) + 1.0);
    else
      z = u(gen) * 1e6;
    const double w = lambert_w(WBranch::principal, z);
    CHECK(w >= -1.0);
    CHECK(residual(w, z) <= 1e-13);
  }
  for (int i = 0; i < 2000; ++i) {
    double z;
    if (i % 3 == 0)
      z = -std::exp(-1.0) + u(gen) * 1e-5;
    else if (i % 3 == 1)
      z = -std::exp(-1.0) * u(gen);
    else
      z = -std::exp(-1.0 - 40.0 * u(gen));  // deep tail toward 0-
    if (z >= 0.0) continue;
    const double w = lambert_w(WBranch::lower, z);
    CHECK(w <= -1.0);
    CHECK(residual(w, z) <= 1e-13);
  }
}

TEST_CASE("lambert_w conjugate identities") {
  // W_0(-d e^{-d}) = -d for d in (0,1]
  for (int i = 1; i <= 100; ++i) {
    const double d = i / 100.0;
    const double w = lambert_w(WBranch::principal, -d * std::exp(-d));
    CHECK(std::fabs(w + d) <= 1e-12);
  }
  // -W_{-1}(-d e^{-d}) = d for d > 1
  for (int i = 1; i <= 100; ++i) {
    const double d = 1.0 + i / 10.0;
    const double w = lambert_w(WBranch::lower, -d * std::exp(-d));
    CHECK(std::fabs(-w - d) <= 1e-12 * d);
  }
}

TEST_CASE("lambert_w domain errors") {
  CHECK_THROWS_AS(lambert_w(WBranch::principal, -0.368), std::domain_error);
  CHECK_THROWS_AS(lambert_w(WBranch::lower, 0.0), std::domain_error);
  CHECK_THROWS_AS(lambert_w(WBranch::lower, 0.5), std::domain_error);
  // inside the slack, clamps to the branch point
  CHECK(lambert_w(WBranch::principal, -std::exp(-1.0) - 5e-13) ==
        doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("upper incomplete gamma, pinned and oracle") {
  CHECK(upper_incomplete_gamma_int(1, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(upper_incomplete_gamma_int(1, 2.5) ==
        doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
  // integral of t^2 e^{-t} over [2, inf): quadrature oracle
  const double oracle = integrate_value(
      [](double t) { return t * t * std::exp(-t); }, 2.0, 80.0, 1e-14);
  CHECK(upper_incomplete_gamma_int(3, 2.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(upper_incomplete_gamma_int(3, 2.0) ==
        doctest::Approx(10.0 * std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("upper incomplete gamma vs quadrature oracle on [-30, 30]") {
  for (int s = 1; s <= 20; s += 3) {
    for (double x = -30.0; x <= 30.0; x += 7.5) {
      const double v = upper_incomplete_gamma_int(s, x);
      double oracle;
      if (x >= 0.0) {
        oracle = integrate_value(
            [s](double t) { return std::pow(t, s - 1) * std::exp(-t); }, x,
            x + 80.0 + 10.0 * s, 1e-13);
      } else {
        // split at zero; the positive part is the finite-sum identity at 0
        oracle = integrate_value(
                     [s](double t) { return std::pow(t, s - 1) * std::exp(-t); },
                     x, 0.0, 1e-13) +
                 upper_incomplete_gamma_int(s, 0.0);
      }
      CHECK(v == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("upper incomplete gamma overflow reported") {
  CHECK_THROWS_AS(upper_incomplete_gamma_int(2, -800.0), std::overflow_error);
  CHECK_THROWS_AS(upper_incomplete_gamma_int(1, -1000.0), std::overflow_error);
}

TEST_CASE("gaussian_q") {
  CHECK(gaussian_q(0.0) == doctest::Approx(0.5).epsilon(1e-16));
  CHECK(gaussian_q(40.0) <= 1e-15);
  // tail integral oracle for Q(1)
  const double oracle = integrate_value(
      [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); },
      1.0, 42.0, 1e-14);
  CHECK(gaussian_q(1.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(gaussian_q(1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-12));
}

TEST_CASE("r_series hand-expansion values") {
  CHECK(r_series(3.7, 0, 0.9) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r_series(-123.0, 0, 0.1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r_series(0.0, 1, 1.0) ==
        doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-14));
  // term-by-term: 1 + (-2) z + z^2/2 with z = 0.5 e^{-0.5}
  const double z = 0.5 * std::exp(-0.5);
  CHECK(r_series(-3.0, 2, 0.5) ==
        doctest::Approx(1.0 - 2.0 * z + z * z / 2.0).epsilon(1e-14));
  CHECK(r_series(-3.0, 2, 0.5) == doctest::Approx(0.4394542704337969).epsilon(1e-13));
}

#ifdef EHSTORE_HAVE_BOOST_RATIONAL
TEST_CASE("r_series against an exact rational oracle") {
  using boost::multiprecision::cpp_bin_float_100;
  using boost::multiprecision::cpp_rational;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> uy(-30.0, 10.0);
  std::uniform_real_distribution<double> ud(0.05, 3.0);
  std::uniform_int_distribution<int> ul(0, 25);
  for (int trial = 0; trial < 60; ++trial) {
    const double y = uy(gen);
    const double delta = ud(gen);
    const int l = ul(gen);
    // z is the double value of delta*e^{-delta}; the oracle treats y and z
    // as exact rationals so only the summation itself is checked
    const double z = delta * std::exp(-delta);
    const cpp_rational yr(y), zr(z);
    cpp_rational sum = 0, zq = 1, fact = 1;
    for (int q = 0; q <= l; ++q) {
      if (q > 0) {
        zq *= zr;
        fact *= q;
      }
      cpp_rational base = yr + q, p = 1;
      for (int k = 0; k < q; ++k) p *= base;
      sum += p * zq / fact;
    }
    const double oracle = static_cast<double>(cpp_bin_float_100(sum));
    const double got = r_series(y, l, delta);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("r_series log-domain guard for huge terms") {
  // direct double evaluation of (y+q)^q overflows here; the true value does not
  const double y = 2.8e13;
  const int l = 25;
  const double delta = 1.0;
  const double got = r_series(y, l, delta);
  CHECK(std::isfinite(got));

  using boost::multiprecision::cpp_bin_float_100;
  using boost::multiprecision::cpp_rational;
  const double z = delta * std::exp(-delta);
  const cpp_rational yr(y), zr(z);
  cpp_rational sum = 0, zq = 1, fact = 1;
  for (int q = 0; q <= l; ++q) {
    if (q > 0) {
      zq *= zr;
      fact *= q;
    }
    cpp_rational base = yr + q, p = 1;
    for (int k = 0; k < q; ++k) p *= base;
    sum += p * zq / fact;
  }
  const cpp_bin_float_100 oracle(sum);
  const cpp_bin_float_100 rel = abs(cpp_bin_float_100(got) - oracle) / oracle;
  CHECK(static_cast<double>(rel) <= 1e-9);
}
#endif
