#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "regdet/expansion.hpp"
#include "regdet/quadrature.hpp"

namespace regdet {

// Antiderivative of z^alpha log^k z, normalized so that it has no constant
// term in its own expansion (log^{k+1}/(k+1) for alpha = -1).
double antiderivative_term(double alpha, int k, double x);
// Finite part of the integral of z^alpha log^k z over [A, inf).
double finite_part_tail_inf(double alpha, int k, double A);
// Finite part of the integral of z^alpha log^k z over (0, a].
double finite_part_tail_zero(double alpha, int k, double a);
// Term-by-term finite parts of a whole expansion.
double finite_part_inf(const Expansion& e, double A);
double finite_part_zero(const Expansion& e, double a);

enum class Side { Zero, Infinity };

struct TailModel {
  Side side = Side::Infinity;
  Expansion expansion;
  double anchor = 1.0;
  std::optional<FitReport> fit;  // empty when the expansion was supplied
};

struct IntegrandHandle {
  std::function<double(double)> f;
  std::optional<Expansion> at_zero;
  std::optional<Expansion> at_infinity;
};

// How one end of the integration range is treated.
//  ProperLimit  - the window edge is the true integration limit, no tail.
//  BasisSpec    - fit this basis on geometric samples beyond the edge
//                 (a supplied expansion on the handle takes precedence).
//  Expansion    - use this expansion for the tail.
struct ProperLimit {};
using TailRule = std::variant<ProperLimit, BasisSpec, Expansion>;

struct TailOptions {
  int samples = 12;       // at least |basis| + 4 are always used
  double ratio = 2.0;     // geometric spacing of tail samples
  double rel_residual_cap = 1e-7;
};

struct RegIntOptions {
  QuadOptions quad;
  TailOptions tail;
  FitOptions fit;
};

struct RegIntResult {
  double value = 0.0;
  double core_part = 0.0;
  double tail_zero_part = 0.0;
  double tail_inf_part = 0.0;
  double error_estimate = 0.0;
  std::optional<TailModel> zero_tail;
  std::optional<TailModel> inf_tail;
};

// Finite-part integral: adaptive quadrature on [a, A] plus closed-form finite
// parts of the tail expansions on (0, a] and [A, inf).
RegIntResult reg_integral(const IntegrandHandle& f, double a, double A, const TailRule& zero,
                          const TailRule& inf, const RegIntOptions& opt = {});

// Fits a tail model for one side of a window.
TailModel fit_tail(const std::function<double(double)>& f, Side side, double anchor,
                   const BasisSpec& basis, const RegIntOptions& opt = {});

struct LogDetRegIntOptions {
  double split = 1.0;   // proper integral on (0, split], finite part beyond
  double upper = 64.0;  // end of the quadrature window
  // Tail basis of z^{2m-1} trace(z) at infinity; empty means z^-1, z^-3, ..., z^-9.
  BasisSpec tail_basis;
  // zeta(0) of the operator, i.e. the regularized count of nonzero eigenvalues
  // (N - kernel for a finite spectrum). Required for m >= 2.
  std::optional<double> zeta_at_zero;
  RegIntOptions regint;
};

struct LogDetRegIntResult {
  double value = 0.0;
  double near_part = 0.0;  // -2 * proper integral of z^{2m-1}(trace - kernel z^{-2m})
  double far_part = 0.0;   // -2 * finite-part integral of z^{2m-1} trace beyond split
  // -H_{m-1} zeta(0): each eigenvalue gives log(lambda) + H_{m-1} under the
  // finite-part integral, H_j the harmonic numbers.
  double correction = 0.0;
  double error_estimate = 0.0;
  RegIntResult far;
};

// log det as -2 times the finite-part integral of z^{2m-1} trace(z, m) over
// (0, inf), plus the harmonic-number correction for m >= 2.
LogDetRegIntResult logdet_via_regint(const std::function<double(double, int)>& trace, int m,
                                     int kernel_dim, const LogDetRegIntOptions& opt = {});

}  // namespace regdet
