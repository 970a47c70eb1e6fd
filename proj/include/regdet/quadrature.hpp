#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "regdet/errors.hpp"
#include "regdet/summation.hpp"

namespace regdet {

struct QuadOptions {
  double abs_tol = 1e-14;
  double rel_tol = 1e-10;
  int max_intervals = 20000;
  // Accept once the error is below this fraction of the integral of |f|; set it
  // above the noise level of integrands that are themselves computed numerically.
  double l1_rel_floor = 0.0;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;  // integral of |f|, used for the round-off floor
  int intervals = 0;
};

namespace detail {

struct Panel {
  double a, b, value, error, l1;
};

// One 21-point Gauss-Kronrod panel; error is |K21 - G10| on [a, b].
template <class F>
Panel gk21_panel(F& f, double a, double b) {
  using K = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& x = K::abscissa();
  const auto& wk = K::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double f0 = f(mid);
  double kr = f0 * wk[0];
  double l1 = std::fabs(f0) * wk[0];
  double ga = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    double fp = f(mid + half * x[i]);
    double fm = f(mid - half * x[i]);
    kr += (fp + fm) * wk[i];
    l1 += (std::fabs(fp) + std::fabs(fm)) * wk[i];
    if (i & 1) ga += (fp + fm) * wg[i / 2];
  }
  if (!std::isfinite(kr))
    throw NumericalError("integrand not finite on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  return {a, b, kr * half, std::fabs((kr - ga) * half), l1 * std::fabs(half)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod over the segments given by consecutive
// breakpoints. Always splits the panel with the largest error estimate.
// Stops when the summed error meets max(abs_tol, rel_tol*|I|) or falls to the
// round-off floor of the integrand; throws NumericalError otherwise.
template <class F>
QuadResult integrate_pieces(F&& f, std::span<const double> breaks, const QuadOptions& opt = {}) {
  if (breaks.size() < 2) throw InputError("integration needs at least two breakpoints");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i] > breaks[i - 1]))
      throw InputError("integration breakpoints must be strictly increasing");

  auto worse = [](const detail::Panel& p, const detail::Panel& q) { return p.error < q.error; };
  std::priority_queue<detail::Panel, std::vector<detail::Panel>, decltype(worse)> heap(worse);
  double total = 0.0, err = 0.0, l1 = 0.0;
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    auto p = detail::gk21_panel(f, breaks[i - 1], breaks[i]);
    total += p.value;
    err += p.error;
    l1 += p.l1;
    heap.push(p);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  auto done = [&] {
    double target = std::max(opt.abs_tol, opt.rel_tol * std::fabs(total));
    return err <= target || err <= std::max(50.0 * eps, opt.l1_rel_floor) * l1;
  };
  int count = static_cast<int>(heap.size());
  while (!done()) {
    auto worst = heap.top();
    double mid = 0.5 * (worst.a + worst.b);
    if (count >= opt.max_intervals || !(mid > worst.a && mid < worst.b)) {
      throw NumericalError("quadrature did not converge: error " + std::to_string(err) +
                           " after " + std::to_string(count) + " intervals");
    }
    heap.pop();
    auto left = detail::gk21_panel(f, worst.a, mid);
    auto right = detail::gk21_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
    ++count;
  }

  // Recombine in left-to-right order so the result does not depend on the
  // history of running sums.
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const detail::Panel& p, const detail::Panel& q) { return p.a < q.a; });
  CompensatedSum v, e, l;
  for (const auto& p : panels) {
    v.add(p.value);
    e.add(p.error);
    l.add(p.l1);
  }
  return {v.value(), e.value(), l.value(), count};
}

template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  if (a == b) return {};
  if (a > b) {
    auto r = integrate(f, b, a, opt);
    r.value = -r.value;
    return r;
  }
  const double br[2] = {a, b};
  return integrate_pieces(f, std::span<const double>(br, 2), opt);
}

}  // namespace regdet
