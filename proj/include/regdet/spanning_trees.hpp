#pragma once

#include <gmpxx.h>

#include "regdet/discrete_torus.hpp"

namespace regdet {

// Number of spanning trees of the torus graph (C_n)^m, n = 2 axes carrying a
// doubled edge. Computed as the determinant of the reduced graph Laplacian
// by band elimination modulo word-sized primes and Chinese remaindering. The
// loop stops at the Hadamard bound (2m)^(n^m - 1) or once the reconstruction
// is unchanged by three further primes. Requires n^m <= 4096.
mpz_class spanning_tree_count(const DiscreteTorus& t);

// Product of the nonzero graph-Laplacian eigenvalues sum_i 4 sin^2(pi k_i/n),
// evaluated in multiprecision and rounded to the nearest integer. Throws
// NumericalError if the product is not within 1e-6 of an integer.
mpz_class eigenvalue_product_exact(const DiscreteTorus& t);

struct MatrixTreeCheck {
  mpz_class trees;
  mpz_class eigen_product;   // should equal n^m * trees
  bool integer_match = false;
  double log_rescaled = 0.0;  // log_det_rescaled in double precision
  double log_expected = 0.0;  // log(n^m * trees)
  double rel_diff = 0.0;
  bool pass(double rel_tol = 1e-9) const { return integer_match && rel_diff <= rel_tol; }
};

MatrixTreeCheck matrix_tree_check(const DiscreteTorus& t, const LatticeOptions& opt = {});

// Natural log of a positive big integer.
double log_mpz(const mpz_class& v);

}  // namespace regdet
