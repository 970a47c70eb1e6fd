#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "regdet/discrete_torus.hpp"
#include "regdet/quadrature.hpp"

namespace regdet {

// Exact Bernoulli numbers with B_1 = -1/2, from sum_{j<=i} C(i+1, j) B_j = 0.
mpq_class bernoulli_number(int i);
constexpr int kMaxBernoulliIndex = 200;

class BernoulliTable {
 public:
  explicit BernoulliTable(int M);  // holds B_0 .. B_{2M+1}
  int order() const { return M_; }
  const mpq_class& exact(int i) const;
  double value(int i) const;

 private:
  int M_;
  std::vector<mpq_class> exact_;
  std::vector<double> value_;
};

// B_i(t) = sum_j C(i, j) B_j t^{i-j}
double bernoulli_polynomial(int i, double t);
// B_i(x - floor(x))
double periodic_bernoulli(int i, double x);

// u(order, x): the order-th derivative of u at x.
using DerivativeOracle = std::function<double(int, double)>;

struct EMParts {
  double integral = 0.0;
  double derivative_boundary = 0.0;
  double endpoint_average = 0.0;
  double remainder = 0.0;
  double total() const { return integral + derivative_boundary + endpoint_average + remainder; }
};

QuadOptions em_quad_defaults();

// One summation operator on [0, n]:
//  1 integral, 2 odd-derivative boundary terms, 3 periodic Bernoulli remainder,
//  4 endpoint average.
double apply_em_operator(int beta, const DerivativeOracle& u, std::int64_t n, int M,
                         const QuadOptions& q = em_quad_defaults());

// Sum_{x=0}^{n} u(x) split into the four Euler-Maclaurin pieces.
EMParts em_sum_1d(const DerivativeOracle& u, std::int64_t n, int M,
                  const QuadOptions& q = em_quad_defaults());

// Derivatives of g = d omega/dx = (n/pi) sin(2 pi x/n) up to a given order,
// with exact zeros at x in {0, n/2, n}.
std::vector<double> omega_derivative_jet(double n, double x, int order);

// H_{k,l} for l = 0..k-1 at (n, x): the coefficients in
// d^k/dx^k f^{-alpha} = sum_l H_{k,l} f^{-alpha-l-1}, f = omega + const.
// Built by H_{k,l} = d H_{k-1,l} - (alpha + l) H_{k-1,l-1} g.
std::vector<double> h_functionals(int k, double alpha, double n, double x);
double h_recursion_eval(int k, int l, double n, double x, double alpha);
// d^k/dx^k (omega(n, x) + c)^{-alpha} assembled from the H_{k,l}.
double power_derivative(int k, double alpha, double n, double x, double c);

struct EMDecomposition {
  int m = 1;
  std::int64_t n = 2;
  double z = 1.0;
  int alpha = 1;
  int M = 1;
  std::map<std::vector<int>, double> patterns;  // beta tuple -> value
  double total = 0.0;
  double direct = 0.0;  // sum over {0..n}^m computed directly
};

struct EMDecomposeOptions {
  // Order in which the per-axis operators are applied, outermost first.
  // Empty means 0, 1, ..., d-1.
  std::vector<int> axis_order;
  QuadOptions quad = em_quad_defaults();
};

// Default truncation ceil((3m+1)/2).
int default_em_order(int m);

// Value of P_{beta_1} o ... o P_{beta_d} applied to (omega(n, x) + z^2)^{-alpha}
// over d free axes.
double em_pattern_value(int d, double n, double z, int alpha, std::span<const int> beta, int M,
                        const EMDecomposeOptions& opt = {});

// All 4^m patterns for the closed-grid sum S(z, n).
EMDecomposition em_decompose_md(const DiscreteTorus& t, double z, int alpha, int M,
                                const EMDecomposeOptions& opt = {});

// Sum over {0..n}^d of (omega + z^2)^{-alpha}.
double closed_grid_sum(int d, std::int64_t n, double z, int alpha);

// Integral over [0, n]^d of (omega(n, x) + z^2)^{-alpha} for real n > 0.
double homogeneous_integral(int d, double n, double z, int alpha, const QuadOptions& q = em_quad_defaults());

struct HomogeneousTerm {
  int order = 0;  // joint homogeneity degree -m - j
  std::function<double(double, double)> eval;  // (z, n)
};

// Terms of Tr(Delta_n + z^2)^{-m} = sum_j h_{-m-j}(z, n) + H(z, n) collected
// from the integral and endpoint patterns across all inclusion-exclusion levels.
struct HomogeneousDecomposition {
  int m = 1;
  std::vector<HomogeneousTerm> terms;  // j = 0..m
  std::function<double(double, double)> remainder;  // H(z, n), integer n only
};

HomogeneousDecomposition homogeneous_decomposition(int m);

struct SineFactorReport {
  int k = 1;
  int l = 0;
  double alpha = 1.0;
  bool n_branch = false;  // k >= 2(l+1): bound n^{2(l+1)-k}, else x^{2(l+1)-k}
  std::vector<double> n_values;
  std::vector<double> max_ratio;  // per n
  double constant = 0.0;          // max over everything
  bool bounded = false;           // max ratio at most 4x the one at the smallest n
};

SineFactorReport sine_factor_bound_check(int k, int l, std::span<const double> n_grid,
                                         std::span<const double> x_fractions, double alpha = 1.0);

struct CancellationReport {
  long long binomial_sum = 0;
  std::vector<double> z_values;
  std::vector<double> residual;           // |sum_k (-1)^k C(m,k) P_4...P_4|
  std::vector<double> relative_residual;  // residual * z^{2m}
};

CancellationReport h_minus_2m_cancellation(int m, std::span<const double> z_grid);

struct RemainderReport {
  int m = 1;
  int M = 1;
  std::vector<double> z_values;
  std::vector<std::int64_t> n_values;
  // H(z, n) = Tr - sum_j h_{-m-j}, indexed [z][n]
  std::vector<std::vector<double>> remainder;
  // Round-off floor of H: 64 eps (|Tr| + |h|)
  std::vector<std::vector<double>> noise_floor;
  // With F the largest floor over the n grid at this z:
  std::vector<double> scaled_sup;        // sup_n max(|H|, F) z^{2m+2}
  std::vector<double> uniformity_ratio;  // sup_n max(|H|, F) / max(|H(z,n_0)|, F)
  // Sum of the patterns containing a 3 across inclusion-exclusion levels; equals
  // H up to quadrature error. Empty unless requested.
  std::vector<std::vector<double>> pattern_remainder;
  double max_pattern_mismatch = 0.0;
  bool uniform = false;   // every ratio <= 2
  bool decaying = false;  // doubling z divides sup |H| by >= 2^{2m+1} or reaches the floor
};

RemainderReport remainder_uniformity_check(int m, int M, std::span<const double> z_grid,
                                           std::span<const std::int64_t> n_grid,
                                           bool pattern_crosscheck = true);

}  // namespace regdet
