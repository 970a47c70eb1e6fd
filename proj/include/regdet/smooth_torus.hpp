#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regdet/discrete_torus.hpp"
#include "regdet/expansion.hpp"
#include "regdet/regint.hpp"

namespace regdet {

// theta_1(t) = sum_{j in Z} exp(-t j^2); the modular identity
// theta_1(t) = sqrt(pi/t) theta_1(pi^2/t) is used for t < 1.
double theta1(double t);
// theta_1(t) - 1 without cancellation for large t.
double theta1_minus_one(double t);
// Heat trace of the flat torus R^m / (2 pi Z)^m: theta_1(t)^m.
double theta_function(int m, double t);
double theta_minus_one(int m, double t);

// Tr(Delta + z^2)^{-alpha} on the flat m-torus with eigenvalues |k|^2, k in Z^m.
// Needs alpha > m/2.
double resolvent_trace_continuum(int m, double z, int alpha);
// Same with the k = 0 term z^{-2 alpha} removed.
double resolvent_trace_continuum_nonzero(int m, double z, int alpha);

// Spectral zeta function sum' |k|^{-2s}, continued to real s != m/2.
double spectral_zeta(int m, double s);
// -zeta'(0) from the Mellin representation of the heat trace.
double log_det_zeta(int m);

// log det via -2 times the finite-part integral of z^{2m-1} Tr(Delta + z^2)^{-m}.
// With an empty tail basis the exponents m-1, -1, -3 are used.
LogDetRegIntResult logdet_zeta_via_regint(int m, const LogDetRegIntOptions& opt = {});

struct ConvergenceReport {
  int m = 1;
  int alpha = 1;
  double z = 1.0;
  double continuum = 0.0;
  std::vector<std::int64_t> n;
  std::vector<double> discrete;
  std::vector<double> diff;  // continuum - discrete
  std::vector<int> sign;
  bool strictly_decreasing = false;
  double final_abs_diff = 0.0;
  double final_tol = 1e-6;
  bool final_below = false;
  // z-derivative identity d/dz Tr^{-alpha} = -2 alpha z Tr^{-alpha-1}, checked by
  // central differences on every discrete trace and on the continuum trace.
  double max_derivative_rel_error = 0.0;
  double derivative_tol = 1e-6;
  bool derivative_ok = false;
  bool pass() const { return strictly_decreasing && final_below && derivative_ok; }
};

ConvergenceReport convergence_check(int m, std::span<const std::int64_t> n_grid, double z, int alpha,
                                    double final_tol = 1e-6, double derivative_tol = 1e-6,
                                    const LatticeOptions& opt = {});

enum class ProductMode { ByCount, ByCutoff };

// Sum of log |k|^2 over the first N nonzero eigenvalues (ByCount) or over
// 0 < |k| <= Lambda (ByCutoff).
double partial_log_product(int m, ProductMode mode, double parameter);

// Number of lattice points with 0 < |k| <= Lambda.
std::int64_t lattice_count(int m, double lambda);

// Cutoff product averaged over Lambda = Lambda0 * e^t, t in [-log 2, log 2],
// against a smooth compactly supported bump; equivalently every eigenvalue is
// weighted by a smooth cutoff in |k|/Lambda0.
double smoothed_log_product(int m, double lambda0);

struct EigenproductResult {
  double constant = 0.0;
  double uncertainty = 0.0;
  double reference = 0.0;  // log_det_zeta(m)
  FitReport fit;
  std::vector<double> parameters;
  std::vector<double> values;
};

// Fits the declared basis to partial products over the grid. With smoothing
// on (the default for m >= 2 in by-cutoff mode) the smoothed product is used.
EigenproductResult eigenproduct_reglimit(int m, ProductMode mode, std::span<const double> grid,
                                         const BasisSpec& basis, bool smoothing);

}  // namespace regdet
