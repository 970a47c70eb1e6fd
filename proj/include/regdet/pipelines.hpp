#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regdet/discrete_torus.hpp"
#include "regdet/expansion.hpp"

namespace regdet {

struct MainTheoremResult {
  int m = 1;
  bool rescaled = false;
  double constant = 0.0;
  double uncertainty = 0.0;
  // log_det_zeta(m), or log_det_zeta(m) + 2 zeta(0) log(2 pi) for the graph Laplacian
  double reference = 0.0;
  FitReport fit;
  std::vector<std::int64_t> n_values;
  std::vector<double> values;
  bool pass(double tol) const;
};

// Fits the basis to log det over the n grid and returns the constant term
// next to the zeta-determinant of the flat torus.
MainTheoremResult main_theorem_pipeline(int m, std::span<const std::int64_t> n_grid, const BasisSpec& basis,
                                        bool rescaled = false, const LatticeOptions& opt = {});

// Integer grid round(start * ratio^j) up to stop, duplicates removed.
std::vector<std::int64_t> integer_geometric_grid(std::int64_t start, std::int64_t stop, double ratio);

struct CJKResult {
  double coefficient = 0.0;  // fitted n^2 coefficient of the graph-Laplacian log det
  double uncertainty = 0.0;
  double reference = 0.0;    // double-integral value
  double closed_form = 0.0;  // 4G/pi, G Catalan's constant
  FitReport fit;
  std::vector<std::int64_t> n_values;
  std::vector<double> values;
};

// (1/(4 pi^2)) times the integral of log(4 - 2 cos u - 2 cos v) over [0, 2 pi]^2.
double cjk_double_integral();

// Leading coefficient of log det of the graph Laplacian on the 2-torus.
// An empty basis means n^2, log n, 1, n^-2, n^-4.
CJKResult cjk_coefficient_fit(std::span<const std::int64_t> n_grid, const BasisSpec& basis = {},
                              const LatticeOptions& opt = {});

}  // namespace regdet
