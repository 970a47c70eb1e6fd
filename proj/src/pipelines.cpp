#include "regdet/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/constants/constants.hpp>

#include "regdet/errors.hpp"
#include "regdet/quadrature.hpp"
#include "regdet/smooth_torus.hpp"

namespace regdet {

bool MainTheoremResult::pass(double tol) const { return std::fabs(constant - reference) <= tol; }

std::vector<std::int64_t> integer_geometric_grid(std::int64_t start, std::int64_t stop, double ratio) {
  if (start < 2 || stop < start) throw InputError("integer grid needs 2 <= start <= stop");
  if (!(ratio > 1.0)) throw InputError("grid ratio must exceed 1");
  std::vector<std::int64_t> g;
  for (int j = 0;; ++j) {
    double v = static_cast<double>(start) * std::pow(ratio, j);
    auto n = static_cast<std::int64_t>(std::llround(v));
    if (n > stop) break;
    if (g.empty() || n != g.back()) g.push_back(n);
  }
  if (g.back() != stop && std::fabs(std::log(static_cast<double>(stop) / static_cast<double>(g.back()))) < 1e-9) g.back() = stop;
  return g;
}

MainTheoremResult main_theorem_pipeline(int m, std::span<const std::int64_t> n_grid, const BasisSpec& basis,
                                        bool rescaled, const LatticeOptions& opt) {
  if (!basis.contains_constant()) throw InputError("the basis must contain the constant term (0,0)");
  MainTheoremResult r;
  r.m = m;
  r.rescaled = rescaled;
  Samples s;
  for (std::int64_t n : n_grid) {
    DiscreteTorus t(m, n);
    double v = rescaled ? log_det_rescaled(t, opt) : log_det(t, opt);
    r.n_values.push_back(n);
    r.values.push_back(v);
    s.push_back(static_cast<double>(n), v);
  }
  auto lim = extract_reglimit(s, basis);
  r.constant = lim.value;
  r.uncertainty = lim.uncertainty;
  r.fit = lim.report;
  r.reference = log_det_zeta(m);
  if (rescaled) r.reference += 2.0 * spectral_zeta(m, 0.0) * std::log(2.0 * std::numbers::pi);
  return r;
}

double cjk_double_integral() {
  const double pi = std::numbers::pi;
  QuadOptions q;
  q.abs_tol = 1e-15;
  q.rel_tol = 1e-13;
  // Symmetry reduces [0, 2 pi]^2 to four copies of [0, pi]^2. The integrand has
  // a log singularity at the origin; both levels are graded towards 0.
  auto graded = [pi](double scale) {
    std::vector<double> b{0.0};
    for (double t = std::max(scale, 1e-12) / 8.0; t < pi / 2; t *= 2.0) b.push_back(t);
    b.push_back(pi / 2);
    b.push_back(pi);
    return b;
  };
  QuadOptions outer_q = q;
  outer_q.rel_tol = 1e-12;
  outer_q.l1_rel_floor = 1e-12;
  // 4 - 2 cos u - 2 cos v written without cancellation near the origin
  auto inner = [&](double u) {
    double su = std::sin(0.5 * u);
    auto f = [su](double v) {
      double sv = std::sin(0.5 * v);
      return std::log(4.0 * (su * su + sv * sv));
    };
    auto br = graded(u);
    return integrate_pieces(f, std::span<const double>(br), q).value;
  };
  auto br = graded(1e-6);
  double v = integrate_pieces(inner, std::span<const double>(br), outer_q).value;
  return v / (pi * pi);
}

CJKResult cjk_coefficient_fit(std::span<const std::int64_t> n_grid, const BasisSpec& basis, const LatticeOptions& opt) {
  BasisSpec b = basis;
  if (b.pairs.empty()) b.pairs = {{2.0, 0}, {0.0, 1}, {0.0, 0}, {-2.0, 0}, {-4.0, 0}};
  bool has_leading = std::any_of(b.pairs.begin(), b.pairs.end(), [](const BasisPair& p) { return p.alpha == 2.0 && p.k == 0; });
  if (!has_leading) throw InputError("the basis must contain the n^2 term (2,0)");
  CJKResult r;
  Samples s;
  for (std::int64_t n : n_grid) {
    double v = log_det_rescaled(DiscreteTorus(2, n), opt);
    r.n_values.push_back(n);
    r.values.push_back(v);
    s.push_back(static_cast<double>(n), v);
  }
  r.fit = fit_expansion(s, b);
  r.coefficient = r.fit.coefficient(2.0, 0);
  // Spread of the leading coefficient when the first or the last sample is dropped.
  if (s.size() >= b.size() + 3) {
    Samples head, tail;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0) tail.push_back(s.x[i], s.y[i]);
      if (i + 1 < s.size()) head.push_back(s.x[i], s.y[i]);
    }
    r.uncertainty = std::fabs(fit_expansion(tail, b).coefficient(2.0, 0) - fit_expansion(head, b).coefficient(2.0, 0));
  }
  r.reference = cjk_double_integral();
  r.closed_form = 4.0 * boost::math::constants::catalan<double>() / std::numbers::pi;
  return r;
}

}  // namespace regdet
