#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gmpxx.h>

#include "regdet/discrete_torus.hpp"
#include "regdet/errors.hpp"
#include "regdet/spanning_trees.hpp"

using namespace regdet;
using std::numbers::pi;

namespace {

// Brute-force eigenvalue list of the normalized Laplacian.
std::vector<double> brute_spectrum(int m, std::int64_t n) {
  std::vector<double> out;
  std::vector<std::int64_t> k(m, 0);
  const double c = static_cast<double>(n * n) / (pi * pi);
  for (;;) {
    double s = 0;
    for (auto ki : k) s += c * std::pow(std::sin(pi * static_cast<double>(ki) / n), 2);
    out.push_back(s);
    int i = 0;
    while (i < m && ++k[i] == n) k[i++] = 0;
    if (i == m) break;
  }
  return out;
}

// Exact reduced-Laplacian determinant by fraction-free Gaussian elimination.
mpz_class bareiss_trees(int m, int n) {
  int N = 1;
  for (int i = 0; i < m; ++i) N *= n;
  std::vector<std::vector<mpz_class>> L(N, std::vector<mpz_class>(N, 0));
  for (int v = 0; v < N; ++v) {
    int stride = 1;
    for (int ax = 0; ax < m; ++ax, stride *= n) {
      int coord = (v / stride) % n;
      int up = v + (((coord + 1) % n) - coord) * stride;
      int down = v + (((coord + n - 1) % n) - coord) * stride;
      L[v][v] += 2;
      L[v][up] -= 1;
      L[v][down] -= 1;
    }
  }
  // Drop the last row and column. Leading minors of the reduced Laplacian are
  // positive, so no pivoting is needed.
  int R = N - 1;
  mpz_class prev = 1;
  for (int k = 0; k < R - 1; ++k) {
    for (int i = k + 1; i < R; ++i)
      for (int j = k + 1; j < R; ++j) L[i][j] = (L[i][j] * L[k][k] - L[i][k] * L[k][j]) / prev;
    prev = L[k][k];
  }
  return L[R - 1][R - 1];
}

}  // namespace

TEST_CASE("omega examples") {
  DiscreteTorus t1(1, 2);
  std::vector<double> zero{0.0};
  CHECK(omega(t1, zero) == 0.0);
  std::vector<double> x1{1.0};
  CHECK(omega(t1, x1) == doctest::Approx(4 / (pi * pi)).epsilon(1e-15));
  DiscreteTorus t2(2, 4);
  std::vector<double> x2{1.0, 2.0};
  CHECK(omega(t2, x2) == doctest::Approx(24 / (pi * pi)).epsilon(1e-15));
}

TEST_CASE("spectrum is symmetric with a zero mode") {
  for (std::int64_t n : {2, 3, 7, 16, 101}) {
    auto s = spectrum_1d(n);
    CHECK(s[0] == 0.0);
    for (std::int64_t k = 1; k < n; ++k) CHECK(s[k] == s[n - k]);
  }
  DiscreteTorus t(2, 5);
  auto all = sorted_spectrum(t);
  auto brute = brute_spectrum(2, 5);
  std::sort(brute.begin(), brute.end());
  REQUIRE(all.size() == brute.size());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == doctest::Approx(brute[i]).epsilon(1e-13));
}

TEST_CASE("log_det examples") {
  CHECK(log_det(DiscreteTorus(1, 2)) == doctest::Approx(std::log(4 / (pi * pi))).epsilon(1e-14));
  // n^2 (n^2 / 4 pi^2)^(n-1) at n = 3
  CHECK(log_det(DiscreteTorus(1, 3)) == doctest::Approx(std::log(729 / (16 * std::pow(pi, 4)))).epsilon(1e-14));
  CHECK(log_det(DiscreteTorus(1, 3)) == doctest::Approx(-0.7598345336).epsilon(1e-9));
  for (std::int64_t n : {2, 5, 10, 77, 1000, 10000}) {
    double dn = static_cast<double>(n);
    double closed = 2 * std::log(dn) + (dn - 1) * std::log(dn * dn / (4 * pi * pi));
    CAPTURE(n);
    CHECK(std::fabs(log_det(DiscreteTorus(1, n)) - closed) <= 1e-10 * std::fabs(closed));
  }
}

TEST_CASE("log_det against brute-force eigenvalues") {
  for (auto [m, n] : std::vector<std::pair<int, int>>{{2, 6}, {3, 4}, {2, 9}}) {
    double s = 0;
    for (double l : brute_spectrum(m, n))
      if (l > 0) s += std::log(l);
    CHECK(log_det(DiscreteTorus(m, n)) == doctest::Approx(s).epsilon(1e-12));
    LatticeOptions dd;
    dd.precision = Precision::DoubleDouble;
    CHECK(log_det(DiscreteTorus(m, n), dd) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("log_det_rescaled examples") {
  CHECK(log_det_rescaled(DiscreteTorus(1, 3)) == doctest::Approx(std::log(9.0)).epsilon(1e-14));
  CHECK(log_det_rescaled(DiscreteTorus(1, 2)) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  // Graph-Laplacian eigenvalues of the 2x2 torus with doubled edges: 0, 4, 4, 8.
  CHECK(log_det_rescaled(DiscreteTorus(2, 2)) == doctest::Approx(std::log(128.0)).epsilon(1e-14));
}

TEST_CASE("resolvent_trace examples") {
  CHECK(resolvent_trace(DiscreteTorus(1, 2), 1.0, 1) == doctest::Approx(1 + 1 / (1 + 4 / (pi * pi))).epsilon(1e-14));
  // eigenvalues 0, 4/pi^2 * 4 sin^2(pi/4) = 8/pi^2, 16/pi^2, 8/pi^2
  double four = 1 + 2 / (1 + 8 / (pi * pi)) + 1 / (1 + 16 / (pi * pi));
  CHECK(resolvent_trace(DiscreteTorus(1, 4), 1.0, 1) == doctest::Approx(four).epsilon(1e-14));
  CHECK(resolvent_trace(DiscreteTorus(1, 4), 1.0, 1) == doctest::Approx(2.486138376).epsilon(1e-9));
  DiscreteTorus t(2, 6);
  double z = 1e4;
  CHECK(resolvent_trace(t, z, 2) * std::pow(z, 4) == doctest::Approx(36.0).epsilon(1e-6));
  CHECK_THROWS_AS(resolvent_trace(t, 0.0, 1), InputError);
  CHECK_THROWS_AS(resolvent_trace(t, 1.0, 0), InputError);
}

TEST_CASE("trace_inclusion_exclusion examples") {
  CHECK(trace_inclusion_exclusion(DiscreteTorus(1, 2), 1.0) ==
        doctest::Approx(1 + pi * pi / (pi * pi + 4)).epsilon(1e-14));
  DiscreteTorus t(2, 4);
  CHECK(trace_inclusion_exclusion(t, 1.0) == doctest::Approx(resolvent_trace(t, 1.0, 2)).epsilon(1e-12));
  SublatticeMask all{{0, 1}};
  CHECK(sublattice_sum(t, all, 2.0, 2) == doctest::Approx(std::pow(2.0, -4)).epsilon(1e-15));
  CHECK_THROWS_AS((SublatticeMask{{0, 0}}.validate(2)), InputError);
  CHECK_THROWS_AS((SublatticeMask{{2}}.validate(2)), InputError);
}

TEST_CASE("property: dual-path trace equality") {
  for (int m = 1; m <= 2; ++m)
    for (std::int64_t n : {2, 3, 5, 8, 13, 21, 32})
      for (double z : {0.5, 1.0, 2.0}) {
        DiscreteTorus t(m, n);
        double a = resolvent_trace(t, z, m), b = trace_inclusion_exclusion(t, z);
        CAPTURE(m);
        CAPTURE(n);
        CAPTURE(z);
        CHECK(std::fabs(a - b) <= 1e-12 * a);
      }
}

TEST_CASE("property: eigenvalues increase with n and stay below k^2") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> kd(0, 50), extra(0, 200);
  for (int trial = 0; trial < 200; ++trial) {
    int k = kd(rng);
    std::int64_t n = std::max(2, 2 * k) + extra(rng) % 7;
    std::int64_t n2 = n + 1 + extra(rng);
    double s1 = spectrum_1d(n)[k], s2 = spectrum_1d(n2)[k];
    CAPTURE(k);
    CAPTURE(n);
    CAPTURE(n2);
    CHECK(s1 <= s2 * (1 + 1e-15));
    CHECK(s2 <= static_cast<double>(k) * k * (1 + 1e-15));
  }
}

TEST_CASE("property: symmetry folding does not change the trace") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> zd(0.1, 5.0);
  for (int trial = 0; trial < 24; ++trial) {
    int m = 1 + trial % 3;
    std::int64_t n = 3 + static_cast<std::int64_t>(rng() % 30);
    if (m == 3) n = std::min<std::int64_t>(n, 12);
    double z = zd(rng);
    LatticeOptions folded, plain;
    plain.use_symmetry = false;
    DiscreteTorus t(m, n);
    double a = resolvent_trace(t, z, m, folded), b = resolvent_trace(t, z, m, plain);
    CHECK(std::fabs(a - b) <= 1e-13 * a);
  }
}

TEST_CASE("property: z-derivative identity") {
  for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 16}, {2, 8}, {3, 5}})
    for (int alpha = 1; alpha <= 3; ++alpha)
      for (double z : {0.5, 1.0, 3.0}) {
        DiscreteTorus t(m, n);
        const double h = 1e-4 * z;
        double d = (resolvent_trace(t, z + h, alpha) - resolvent_trace(t, z - h, alpha)) / (2 * h);
        double rhs = -2.0 * alpha * z * resolvent_trace(t, z, alpha + 1);
        CHECK(d == doctest::Approx(rhs).epsilon(1e-6));
      }
}

TEST_CASE("threads do not change the result") {
  DiscreteTorus t(2, 200);
  LatticeOptions one, four;
  one.threads = 1;
  four.threads = 4;
  CHECK(log_det(t, one) == doctest::Approx(log_det(t, four)).epsilon(1e-14));
}

TEST_CASE("spanning_tree_count examples") {
  CHECK(spanning_tree_count(DiscreteTorus(1, 3)) == 3);
  CHECK(spanning_tree_count(DiscreteTorus(1, 4)) == 4);
  CHECK(spanning_tree_count(DiscreteTorus(1, 2)) == 2);
  CHECK(spanning_tree_count(DiscreteTorus(2, 4)) == 42467328);
  CHECK_THROWS_AS(spanning_tree_count(DiscreteTorus(2, 65)), InputError);
}

TEST_CASE("spanning_tree_count against exact fraction-free elimination") {
  for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 7}, {2, 3}, {2, 5}, {3, 3}, {2, 7}, {3, 4}}) {
    CAPTURE(m);
    CAPTURE(n);
    CHECK(spanning_tree_count(DiscreteTorus(m, n)) == bareiss_trees(m, n));
  }
}

TEST_CASE("matrix-tree identity on small tori") {
  for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 50}, {2, 2}, {2, 10}, {3, 6}, {4, 3}, {4, 4}}) {
    auto c = matrix_tree_check(DiscreteTorus(m, n));
    CAPTURE(m);
    CAPTURE(n);
    CHECK(c.integer_match);
    CHECK(c.pass());
  }
}
