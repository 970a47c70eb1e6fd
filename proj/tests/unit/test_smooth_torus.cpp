#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "regdet/errors.hpp"
#include "regdet/smooth_torus.hpp"

using namespace regdet;
using std::numbers::pi;

namespace {

// sum_k (k^2 + a^2)^-1
double S(double a) { return pi / (a * std::tanh(pi * a)); }
double dS(double a) { return -pi / (a * a * std::tanh(pi * a)) - pi * pi / (a * std::pow(std::sinh(pi * a), 2)); }

// Tr(Delta + 1)^-2 on the 2-torus: sum over k1 of sum_k2 (k2^2 + a^2)^-2 with a^2 = k1^2 + 1,
// the inner sum being -S'(a)/(2a). Rows beyond K contribute about pi/(2K^2).
double m2_alpha2_z1_oracle() {
  const long K = 100000;
  double s = 0;
  for (long k = K; k >= 1; --k) {
    double a = std::sqrt(static_cast<double>(k) * k + 1);
    s += 2 * (-dS(a) / (2 * a));
  }
  s += -dS(1.0) / 2;
  return s + pi / (2.0 * K * K);
}

}  // namespace

TEST_CASE("continuum trace, m = 1 closed form") {
  CHECK(resolvent_trace_continuum(1, 1.0, 1) == doctest::Approx(3.153348095).epsilon(1e-9));
  for (double z = 0.1; z <= 50.0; z *= 1.37) {
    CAPTURE(z);
    CHECK(resolvent_trace_continuum(1, z, 1) == doctest::Approx(S(z)).epsilon(1e-12));
  }
  double z = 200;
  // Lattice sum against the integral pi / z^2; the difference is exponentially small.
  CHECK(resolvent_trace_continuum(2, z, 2) * z * z == doctest::Approx(pi).epsilon(1e-10));
  CHECK_THROWS_AS(resolvent_trace_continuum(2, 1.0, 1), InputError);
}

TEST_CASE("continuum trace, m = 2 against a row-sum oracle") {
  CHECK(resolvent_trace_continuum(2, 1.0, 2) == doctest::Approx(m2_alpha2_z1_oracle()).epsilon(1e-10));
}

TEST_CASE("theta function") {
  CHECK(theta1(40.0) == doctest::Approx(1.0).epsilon(1e-15));
  double self_dual = std::pow(pi, 0.25) / boost::math::tgamma(0.75);
  CHECK(theta1(pi) == doctest::Approx(self_dual).epsilon(1e-14));
  double direct = 0;
  for (int j = -20; j <= 20; ++j) direct += std::exp(-pi * j * j);
  CHECK(theta1(pi) == doctest::Approx(direct).epsilon(1e-14));
  for (double t = 0.1; t <= 10.0; t *= 1.25) {
    double lhs = theta1(t), rhs = std::sqrt(pi / t) * theta1(pi * pi / t);
    CHECK(std::fabs(lhs - rhs) <= 1e-14 * lhs);
  }
  CHECK(theta_function(3, 0.7) == doctest::Approx(std::pow(theta1(0.7), 3)).epsilon(1e-14));
}

TEST_CASE("property: theta decreasing and above 1") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ld(std::log(0.01), std::log(30.0));
  for (int trial = 0; trial < 100; ++trial) {
    double a = std::exp(ld(rng)), b = std::exp(ld(rng));
    if (a > b) std::swap(a, b);
    if (b - a < 1e-9 * b) continue;
    int m = 1 + trial % 4;
    CHECK(theta_function(m, a) > theta_function(m, b));
    CHECK(theta_minus_one(m, b) > 0.0);
  }
}

TEST_CASE("spectral zeta and determinants") {
  for (int m = 1; m <= 4; ++m) CHECK(spectral_zeta(m, 0.0) == doctest::Approx(-1.0).epsilon(1e-10));
  for (double s : {0.75, 1.0, 1.5, 2.5}) CHECK(spectral_zeta(1, s) == doctest::Approx(2 * boost::math::zeta(2 * s)).epsilon(1e-11));
  double G = boost::math::constants::catalan<double>();
  CHECK(spectral_zeta(2, 2.0) == doctest::Approx(4 * (pi * pi / 6) * G).epsilon(1e-11));
  CHECK(log_det_zeta(1) == doctest::Approx(2 * std::log(2 * pi)).epsilon(1e-12));
  double g4 = std::pow(boost::math::tgamma(0.25), 4);
  CHECK(log_det_zeta(2) == doctest::Approx(std::log(g4 / (4 * pi))).epsilon(1e-10));
}

TEST_CASE("log det via the finite-part integral") {
  auto r1 = logdet_zeta_via_regint(1);
  CHECK(std::fabs(r1.value - 2 * std::log(2 * pi)) <= 1e-4);
  CHECK(std::fabs(r1.far.inf_tail->expansion.coefficient(-1, 0)) < 1e-6);
  auto r2 = logdet_zeta_via_regint(2);
  CHECK(std::fabs(r2.value - log_det_zeta(2)) <= 5e-3);
}

TEST_CASE("discrete to continuum convergence") {
  std::vector<std::int64_t> ns{8, 16, 32, 64, 128, 256};
  auto r = convergence_check(1, ns, 1.0, 1);
  CHECK(r.strictly_decreasing);
  CHECK(r.derivative_ok);
  for (int s : r.sign) CHECK(s == 1);
  auto r2 = convergence_check(2, ns, 1.0, 2, 3e-3);
  CHECK(r2.strictly_decreasing);
  CHECK(r2.final_below);
  CHECK(r2.derivative_ok);
}

TEST_CASE("partial products") {
  for (int L : {1, 3, 10, 57}) {
    double expect = 4 * boost::math::lgamma(L + 1.0);
    CHECK(partial_log_product(1, ProductMode::ByCutoff, L) == doctest::Approx(expect).epsilon(1e-13).scale(1.0));
  }
  CHECK(partial_log_product(1, ProductMode::ByCount, 4) == doctest::Approx(std::log(16.0)).epsilon(1e-14));
  CHECK(partial_log_product(2, ProductMode::ByCutoff, 1) == 0.0);
  CHECK(lattice_count(2, 1) == 4);
  CHECK(lattice_count(2, std::sqrt(2.0)) == 8);
}

TEST_CASE("property: complete shells give equal partial products") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> ld(1.0, 40.0);
  for (int trial = 0; trial < 30; ++trial) {
    int m = 1 + trial % 3;
    double lam = ld(rng);
    auto N = lattice_count(m, lam);
    CHECK(partial_log_product(m, ProductMode::ByCount, static_cast<double>(N)) ==
          doctest::Approx(partial_log_product(m, ProductMode::ByCutoff, lam)).epsilon(1e-13));
  }
}

TEST_CASE("eigenproduct regularized limits") {
  auto g = geometric_grid(16, 2, 9);
  auto basis = parse_basis("1:1,1:0,0:1,0:0,-1:0,-3:0");
  auto cut = eigenproduct_reglimit(1, ProductMode::ByCutoff, g, basis, false);
  CHECK(std::fabs(cut.constant - 2 * std::log(2 * pi)) <= 1e-6);
  auto cnt = eigenproduct_reglimit(1, ProductMode::ByCount, g, basis, false);
  CHECK(std::fabs(cnt.constant - 2 * std::log(pi)) <= 1e-6);
}
