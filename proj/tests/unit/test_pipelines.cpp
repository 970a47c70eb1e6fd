#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/constants/constants.hpp>

#include "regdet/errors.hpp"
#include "regdet/pipelines.hpp"
#include "regdet/smooth_torus.hpp"

using namespace regdet;
using std::numbers::pi;

TEST_CASE("integer geometric grid") {
  auto g = integer_geometric_grid(16, 4096, 2);
  REQUIRE(g.size() == 9);
  CHECK(g.front() == 16);
  CHECK(g.back() == 4096);
  auto h = integer_geometric_grid(2, 10, 1.2);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] > h[i - 1]);
  CHECK_THROWS_AS(integer_geometric_grid(0, 10, 2), InputError);
}

TEST_CASE("main theorem, m = 1") {
  auto g = integer_geometric_grid(16, 4096, 2);
  auto r = main_theorem_pipeline(1, g, parse_basis("1:1,1:0,0:1,0:0"));
  CHECK(std::fabs(r.constant - std::log(4 * pi * pi)) <= 1e-6);
  CHECK(std::fabs(r.reference - std::log(4 * pi * pi)) <= 1e-8);
  CHECK(r.pass(1e-6));
  auto rr = main_theorem_pipeline(1, g, parse_basis("1:1,1:0,0:1,0:0"), true);
  // log det' = log det + 2 zeta(0) log 2 pi with zeta(0) = -1
  CHECK(std::fabs(rr.reference) <= 1e-10);
  CHECK(std::fabs(rr.constant) <= 1e-6);
  CHECK_THROWS_AS(main_theorem_pipeline(1, g, parse_basis("1:1,1:0")), InputError);
}

TEST_CASE("main theorem, m = 2") {
  auto g = integer_geometric_grid(64, 1024, 1.25);
  auto r = main_theorem_pipeline(2, g, parse_basis("2:1,2:0,1:1,1:0,0:1,0:0,-1:0,-2:0"));
  CHECK(std::fabs(r.constant - log_det_zeta(2)) <= 1e-2);
}

TEST_CASE("graph Laplacian leading coefficient") {
  CHECK(cjk_double_integral() == doctest::Approx(4 * boost::math::constants::catalan<double>() / pi).epsilon(1e-10));
  auto g = integer_geometric_grid(16, 512, std::sqrt(2.0));
  auto r = cjk_coefficient_fit(g);
  CHECK(std::fabs(r.coefficient - r.reference) <= 1e-4);
}
