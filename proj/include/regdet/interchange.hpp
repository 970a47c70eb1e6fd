#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "regdet/expansion.hpp"
#include "regdet/regint.hpp"

namespace regdet {

// f(z, n), jointly homogeneous of the given degree, with its expansions in
// each variable at infinity (the other variable set to 1).
struct HomogeneousFn {
  std::string name;
  std::function<double(double, double)> f;
  double degree = 0.0;
  Expansion expansion_z;  // f(z, 1) as z -> inf
  Expansion expansion_n;  // f(1, n) as n -> inf
};

// Throws InputError unless both expansions point to infinity, the z remainder
// lies below z^-1 and the n remainder below min(0, d+1).
void check_hypotheses(const HomogeneousFn& f);

// Largest |f(tz, tn) - t^d f(z, n)| / |t^d f(z, n)| over random samples.
double homogeneity_error(const HomogeneousFn& f, int samples = 64, std::uint64_t seed = 0x5eed);

// Expansion of f(z, 1) as z -> 0 read off from expansion_n: the term
// b n^beta log^k n becomes (-1)^k b z^(d - beta) log^k z.
Expansion zero_expansion(const HomogeneousFn& f);
// Expansion of f(z, n) as z -> inf for fixed n.
Expansion scaled_expansion_z(const HomogeneousFn& f, double n);

struct InterchangeOptions {
  std::vector<double> n_grid;  // empty: 16, 32, ..., 4096
  double window_factor = 64.0; // quadrature on [1, window_factor * n]
  double corr_window = 1e3;    // correction integral on [1/corr_window, corr_window]
  double degree_tol = 1e-12;   // |d + 1| below this takes the d = -1 branch
  double homogeneity_tol = 1e-12;
  std::optional<BasisSpec> lhs_basis;  // default derived from the expansions
  RegIntOptions regint;
};

// Finite-part integral of f(z, 1) over (0, inf) when d = -1, zero otherwise.
double correction_term(const HomogeneousFn& f, const InterchangeOptions& opt = {});

// Basis for the n-dependence of the finite-part integral over [1, inf):
// n^(d+1), the exponents of expansion_n with their log powers, and the constant.
BasisSpec lhs_basis(const HomogeneousFn& f);

struct LhsResult {
  double value = 0.0;
  double uncertainty = 0.0;
  std::vector<double> n_values;
  std::vector<double> integrals;
  FitReport fit;
};

// Regularized limit as n -> inf of the finite-part integral of f(z, n) over [1, inf).
LhsResult lhs_interchange(const HomogeneousFn& f, const InterchangeOptions& opt = {});

// Finite-part integral over [1, inf) of the pointwise regularized limit
// sum_k (-1)^k b_0k z^d log^k z, without the correction.
double limit_integral(const HomogeneousFn& f);
// limit_integral + correction_term
double rhs_interchange(const HomogeneousFn& f, const InterchangeOptions& opt = {});

struct InterchangeReport {
  std::string name;
  double degree = 0.0;
  double lhs = 0.0;
  double lhs_uncertainty = 0.0;
  double rhs = 0.0;
  double corr = 0.0;
  double abs_diff = 0.0;
  double homogeneity_error = 0.0;
  double tol = 1e-6;
  bool pass = false;
};

InterchangeReport check_interchange(const HomogeneousFn& f, double tol = 1e-6, const InterchangeOptions& opt = {});

// n/(z^2+n^2), n^2/(z^2+n^2), z^-2, n^3/(z^2+n^2)^2, n/(z(z+n))
std::vector<HomogeneousFn> builtin_registry();
const HomogeneousFn& registry_function(const std::string& name);

}  // namespace regdet
