#include <doctest.h>

#include <cmath>
#include <numbers>

#include "regdet/errors.hpp"
#include "regdet/interchange.hpp"

using namespace regdet;
using std::numbers::pi;

TEST_CASE("registry is homogeneous and satisfies the hypotheses") {
  for (const auto& f : builtin_registry()) {
    CAPTURE(f.name);
    CHECK(homogeneity_error(f) <= 1e-12);
    CHECK_NOTHROW(check_hypotheses(f));
  }
  CHECK_THROWS_AS(registry_function("nope"), InputError);
}

TEST_CASE("correction term") {
  CHECK(correction_term(registry_function("n/(z^2+n^2)")) == doctest::Approx(pi / 2).epsilon(1e-9));
  CHECK(correction_term(registry_function("n^2/(z^2+n^2)")) == 0.0);
  CHECK(std::fabs(correction_term(registry_function("n/(z(z+n))"))) <= 1e-8);
  CHECK(correction_term(registry_function("n^3/(z^2+n^2)^2")) == doctest::Approx(pi / 4).epsilon(1e-9));
}

TEST_CASE("left and right sides") {
  CHECK(lhs_interchange(registry_function("n/(z^2+n^2)")).value == doctest::Approx(pi / 2).epsilon(1e-8));
  CHECK(lhs_interchange(registry_function("n^2/(z^2+n^2)")).value == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(lhs_interchange(registry_function("z^-2")).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rhs_interchange(registry_function("n/(z^2+n^2)")) == doctest::Approx(pi / 2).epsilon(1e-9));
  CHECK(limit_integral(registry_function("n/(z^2+n^2)")) == 0.0);
  CHECK(rhs_interchange(registry_function("n^2/(z^2+n^2)")) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rhs_interchange(registry_function("z^-2")) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("check_interchange passes on the registry") {
  for (const auto& f : builtin_registry()) {
    auto r = check_interchange(f, 1e-6);
    CAPTURE(f.name);
    CHECK(r.pass);
  }
}

TEST_CASE("property: scaling covariance") {
  for (double c : {-2.0, 0.5, 3.0}) {
    auto f = registry_function("n^3/(z^2+n^2)^2");
    HomogeneousFn g = f;
    g.name = "scaled";
    g.f = [f, c](double z, double n) { return c * f.f(z, n); };
    g.expansion_z = f.expansion_z.scaled(c);
    g.expansion_n = f.expansion_n.scaled(c);
    auto a = check_interchange(f), b = check_interchange(g);
    CHECK(b.lhs == doctest::Approx(c * a.lhs).epsilon(1e-8));
    CHECK(b.rhs == doctest::Approx(c * a.rhs).epsilon(1e-12));
    CHECK(b.corr == doctest::Approx(c * a.corr).epsilon(1e-12));
  }
}

TEST_CASE("non-homogeneous input is rejected") {
  HomogeneousFn f = registry_function("n/(z^2+n^2)");
  f.f = [](double z, double n) { return n / (z * z + n * n + 1); };
  CHECK(homogeneity_error(f) > 1e-6);
  CHECK_THROWS_AS(check_interchange(f), InputError);
}
