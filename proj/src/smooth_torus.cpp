#include "regdet/smooth_torus.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "regdet/errors.hpp"
#include "regdet/quadrature.hpp"
#include "regdet/summation.hpp"

namespace regdet {

namespace {

constexpr double kPi = std::numbers::pi;

// 2 sum_{j>=1} exp(-t j^2) for t >= 1, stopping once terms drop below 1e-18
// of the running sum.
double theta_tail_direct(double t) {
  double s = 0.0;
  for (int j = 1;; ++j) {
    double term = std::exp(-t * j * j);
    s += term;
    if (term < 1e-18 * s || term == 0.0) break;
  }
  return 2.0 * s;
}

void check_dimension(int m) {
  if (m < 1 || m > 4) throw InputError("continuum torus dimension must be between 1 and 4");
}

QuadOptions tight() {
  QuadOptions q;
  q.rel_tol = 1e-14;
  q.abs_tol = 1e-300;
  return q;
}

}  // namespace

double theta1(double t) {
  if (!(t > 0.0)) throw InputError("theta needs t > 0");
  if (t >= 1.0) return 1.0 + theta_tail_direct(t);
  return std::sqrt(kPi / t) * (1.0 + theta_tail_direct(kPi * kPi / t));
}

double theta1_minus_one(double t) {
  if (!(t > 0.0)) throw InputError("theta needs t > 0");
  if (t >= 1.0) return theta_tail_direct(t);
  return theta1(t) - 1.0;
}

double theta_function(int m, double t) {
  check_dimension(m);
  return std::pow(theta1(t), m);
}

double theta_minus_one(int m, double t) {
  check_dimension(m);
  return std::expm1(m * std::log1p(theta1_minus_one(t)));
}

namespace {

// The four pieces of Gamma(alpha) * Tr' after splitting the Mellin integral
// at t = 1 and using the modular form of theta on (0, 1).
double trace_nonzero_scaled(int m, double z, int alpha) {
  const double z2 = z * z;
  const double a = static_cast<double>(alpha);
  const double half = 0.5 * m;
  // k = 0 part of [1, inf) minus the full k = 0 term: -z^{-2a} gamma(a, z^2)
  double p1 = -boost::math::tgamma_lower(a, z2) * std::pow(z, -2.0 * a);
  // leading small-t part: pi^{m/2} int_0^1 t^{a-m/2-1} e^{-t z^2} dt
  double p3 = std::pow(kPi, half) * boost::math::tgamma_lower(a - half, z2) * std::pow(z, -2.0 * (a - half));

  auto q = tight();
  q.abs_tol = 1e-17 * (std::fabs(p3) + std::fabs(p1) + 1e-300);
  // [1, inf): t^{a-1} e^{-t z^2} (theta(t) - 1); decays like e^{-t(1+z^2)}
  const double upper2 = 1.0 + 80.0 / (1.0 + z2);
  auto f2 = [&](double t) { return std::pow(t, a - 1.0) * std::exp(-t * z2) * theta_minus_one(m, t); };
  double p2 = integrate(f2, 1.0, upper2, q).value;
  // (0, 1] after u = pi^2/t: pi^{2a} u^{m/2-a-1} pi^{-m/2} e^{-pi^2 z^2/u} (theta_1(u)^m - 1)
  auto f4 = [&](double u) {
    return std::exp(2.0 * a * std::log(kPi) - half * std::log(kPi) + (half - a - 1.0) * std::log(u) -
                    kPi * kPi * z2 / u) *
           std::expm1(m * std::log1p(theta_tail_direct(u)));
  };
  double p4 = integrate(f4, kPi * kPi, kPi * kPi + 80.0, q).value;
  return (p1 + p3) + (p2 + p4);
}

void check_trace_args(int m, double z, int alpha) {
  check_dimension(m);
  if (!(z > 0.0) || !std::isfinite(z)) throw InputError("z must be positive and finite");
  if (2 * alpha <= m) throw InputError("resolvent trace diverges unless alpha > m/2");
}

}  // namespace

double resolvent_trace_continuum_nonzero(int m, double z, int alpha) {
  check_trace_args(m, z, alpha);
  return trace_nonzero_scaled(m, z, alpha) / boost::math::tgamma(static_cast<double>(alpha));
}

double resolvent_trace_continuum(int m, double z, int alpha) {
  check_trace_args(m, z, alpha);
  return std::pow(z, -2.0 * alpha) + resolvent_trace_continuum_nonzero(m, z, alpha);
}

namespace {

// Entire part of Gamma(s) zeta(s): the Mellin integrals over [1, inf) of the
// heat trace and of its modular image.
double mellin_entire(int m, double s) {
  auto q = tight();
  q.abs_tol = 1e-18;
  auto f1 = [&](double t) { return std::pow(t, s - 1.0) * theta_minus_one(m, t); };
  double i1 = integrate(f1, 1.0, 1.0 + 80.0 + 4.0 * std::fabs(s), q).value;
  const double half = 0.5 * m;
  auto f2 = [&](double u) {
    return std::pow(u, half - s - 1.0) * std::expm1(m * std::log1p(theta_tail_direct(u)));
  };
  double i2 = std::pow(kPi, 2.0 * s - half) * integrate(f2, kPi * kPi, kPi * kPi + 80.0 + 4.0 * std::fabs(s), q).value;
  return i1 + i2;
}

}  // namespace

double spectral_zeta(int m, double s) {
  check_dimension(m);
  const double half = 0.5 * m;
  if (s == half) throw InputError("spectral zeta has a pole at s = m/2");
  if (s == 0.0) return -1.0;
  if (s < 0.0 && s == std::floor(s)) return 0.0;
  double g = -1.0 / s + std::pow(kPi, half) / (s - half) + mellin_entire(m, s);
  return g / boost::math::tgamma(s);
}

double log_det_zeta(int m) {
  check_dimension(m);
  return std::numbers::egamma + 2.0 * std::pow(kPi, 0.5 * m) / m - mellin_entire(m, 0.0);
}

LogDetRegIntResult logdet_zeta_via_regint(int m, const LogDetRegIntOptions& opt) {
  check_dimension(m);
  LogDetRegIntOptions o = opt;
  if (o.tail_basis.pairs.empty())
    o.tail_basis.pairs = {{static_cast<double>(m - 1), 0}, {-1.0, 0}, {-3.0, 0}};
  if (!o.zeta_at_zero) o.zeta_at_zero = spectral_zeta(m, 0.0);
  return logdet_via_regint([m](double z, int alpha) { return resolvent_trace_continuum(m, z, alpha); }, m, 1, o);
}

namespace {

template <class F>
double central_derivative(F&& f, double z) {
  const double h = 1e-3 * z;
  auto d = [&](double step) { return (f(z + step) - f(z - step)) / (2.0 * step); };
  return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

}  // namespace

ConvergenceReport convergence_check(int m, std::span<const std::int64_t> n_grid, double z, int alpha,
                                    double final_tol, double derivative_tol, const LatticeOptions& opt) {
  if (n_grid.empty()) throw InputError("convergence check needs a non-empty n grid");
  if (2 * alpha <= m) throw InputError("convergence check needs alpha > m/2");
  ConvergenceReport r;
  r.m = m;
  r.alpha = alpha;
  r.z = z;
  r.final_tol = final_tol;
  r.derivative_tol = derivative_tol;
  r.continuum = resolvent_trace_continuum(m, z, alpha);

  auto rel_err = [&](double fd, double exact) { return std::fabs(fd - exact) / std::fabs(exact); };
  double worst = rel_err(central_derivative([&](double x) { return resolvent_trace_continuum(m, x, alpha); }, z),
                         -2.0 * alpha * z * resolvent_trace_continuum(m, z, alpha + 1));
  for (auto n : n_grid) {
    DiscreteTorus t(m, n);
    double v = resolvent_trace(t, z, alpha, opt);
    r.n.push_back(n);
    r.discrete.push_back(v);
    r.diff.push_back(r.continuum - v);
    r.sign.push_back(r.continuum > v ? 1 : (r.continuum < v ? -1 : 0));
    double fd = central_derivative([&](double x) { return resolvent_trace(t, x, alpha, opt); }, z);
    worst = std::max(worst, rel_err(fd, -2.0 * alpha * z * resolvent_trace(t, z, alpha + 1, opt)));
  }
  r.strictly_decreasing = true;
  for (std::size_t i = 1; i < r.diff.size(); ++i)
    if (!(std::fabs(r.diff[i]) < std::fabs(r.diff[i - 1]))) r.strictly_decreasing = false;
  r.final_abs_diff = std::fabs(r.diff.back());
  r.final_below = r.final_abs_diff <= final_tol;
  r.max_derivative_rel_error = worst;
  r.derivative_ok = worst <= derivative_tol;
  return r;
}

namespace {

constexpr std::int64_t kMaxShell = std::int64_t(1) << 24;

// r_m(j) = #{k in Z^m : |k|^2 = j} for j <= limit, cached per dimension.
using ShellTable = std::shared_ptr<const std::vector<std::int64_t>>;

ShellTable shell_counts(int m, std::int64_t limit) {
  static std::mutex mu;
  static ShellTable cache[5];
  std::lock_guard<std::mutex> lock(mu);
  auto& c = cache[m];
  const std::int64_t have = c ? static_cast<std::int64_t>(c->size()) : 0;
  if (have > limit) return c;
  if (limit > kMaxShell) throw InputError("lattice enumeration cap exceeded");
  const std::int64_t size = std::max<std::int64_t>(limit + 1, have * 2);
  std::vector<std::int64_t> cur(static_cast<std::size_t>(size), 0);
  cur[0] = 1;
  for (int d = 0; d < m; ++d) {
    std::vector<std::int64_t> next(static_cast<std::size_t>(size), 0);
    for (std::int64_t k = 0; k * k < size; ++k) {
      const std::int64_t mult = k == 0 ? 1 : 2;
      for (std::int64_t j = k * k; j < size; ++j) next[static_cast<std::size_t>(j)] += mult * cur[static_cast<std::size_t>(j - k * k)];
    }
    cur.swap(next);
  }
  c = std::make_shared<const std::vector<std::int64_t>>(std::move(cur));
  return c;
}

std::int64_t shell_limit(double lambda) {
  if (!(lambda >= 0.0)) throw InputError("cutoff must be non-negative");
  double j = std::floor(lambda * lambda);
  if (j > static_cast<double>(kMaxShell)) throw InputError("lattice enumeration cap exceeded");
  return static_cast<std::int64_t>(j);
}

// Smooth cutoff weight W(rho): 1 for rho <= 1/2, 0 for rho >= 2, equal to the
// upper tail of a normalized bump in log rho. Tabulated once and evaluated by
// cubic Hermite interpolation of the cumulative integral.
class SmoothCutoff {
 public:
  SmoothCutoff() {
    const int cells = 8192;
    h_ = 2.0 * half_ / cells;
    cdf_.assign(cells + 1, 0.0);
    pdf_.assign(cells + 1, 0.0);
    auto q = tight();
    q.abs_tol = 1e-20;  // the bump integrates to about 0.2
    CompensatedSum acc;
    for (int i = 0; i <= cells; ++i) {
      double t = -half_ + i * h_;
      pdf_[static_cast<std::size_t>(i)] = bump(t);
      if (i > 0) acc.add(integrate([this](double s) { return bump(s); }, t - h_, t, q).value);
      cdf_[static_cast<std::size_t>(i)] = acc.value();
    }
    norm_ = cdf_.back();
  }
  double weight(double rho) const {
    double t = std::log(rho);
    if (t <= -half_) return 1.0;
    if (t >= half_) return 0.0;
    double u = (t + half_) / h_;
    auto i = static_cast<std::size_t>(std::min<double>(std::floor(u), static_cast<double>(cdf_.size() - 2)));
    double s = u - static_cast<double>(i);
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    double c = h00 * cdf_[i] + h10 * h_ * pdf_[i] + h01 * cdf_[i + 1] + h11 * h_ * pdf_[i + 1];
    return 1.0 - c / norm_;
  }

 private:
  double bump(double t) const {
    double x = t / half_;
    if (std::fabs(x) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - x * x));
  }
  const double half_ = std::log(2.0);
  double h_ = 0.0, norm_ = 1.0;
  std::vector<double> cdf_, pdf_;
};

}  // namespace

std::int64_t lattice_count(int m, double lambda) {
  check_dimension(m);
  if (m == 1) return 2 * static_cast<std::int64_t>(std::floor(lambda));
  const auto j = shell_limit(lambda);
  const auto& r = *shell_counts(m, j);
  std::int64_t c = 0;
  for (std::int64_t i = 1; i <= j; ++i) c += r[static_cast<std::size_t>(i)];
  return c;
}

double partial_log_product(int m, ProductMode mode, double parameter) {
  check_dimension(m);
  if (!(parameter >= 1.0)) throw InputError("partial product parameter must be at least 1");
  CompensatedSum s;
  if (mode == ProductMode::ByCutoff) {
    if (m == 1) {
      const auto top = static_cast<std::int64_t>(std::floor(parameter));
      for (std::int64_t k = 1; k <= top; ++k) s.add(4.0 * std::log(static_cast<double>(k)));
      return s.value();
    }
    const auto j = shell_limit(parameter);
    const auto table = shell_counts(m, j);
    const auto& r = *table;
    for (std::int64_t i = 1; i <= j; ++i)
      if (r[static_cast<std::size_t>(i)]) s.add(static_cast<double>(r[static_cast<std::size_t>(i)]) * std::log(static_cast<double>(i)));
    return s.value();
  }
  // By count: whole shells in ascending order, the last one possibly cut.
  if (parameter > 2147483648.0) throw InputError("eigenvalue count cap exceeded");
  auto remaining = static_cast<std::int64_t>(std::floor(parameter));
  if (m == 1) {
    for (std::int64_t k = 1; remaining > 0; ++k) {
      std::int64_t take = std::min<std::int64_t>(2, remaining);
      s.add(static_cast<double>(take) * 2.0 * std::log(static_cast<double>(k)));
      remaining -= take;
    }
    return s.value();
  }
  std::int64_t limit = 1024;
  auto table = shell_counts(m, limit);
  for (std::int64_t i = 1; remaining > 0; ++i) {
    if (i > limit) {
      limit *= 2;
      table = shell_counts(m, limit);
    }
    std::int64_t take = std::min((*table)[static_cast<std::size_t>(i)], remaining);
    if (take) s.add(static_cast<double>(take) * std::log(static_cast<double>(i)));
    remaining -= take;
  }
  return s.value();
}

double smoothed_log_product(int m, double lambda0) {
  check_dimension(m);
  if (!(lambda0 >= 1.0)) throw InputError("smoothing centre must be at least 1");
  static const SmoothCutoff cutoff;
  const auto j = shell_limit(2.0 * lambda0);
  CompensatedSum s;
  if (m == 1) {
    for (std::int64_t k = 1; k * k <= j; ++k)
      s.add(4.0 * std::log(static_cast<double>(k)) * cutoff.weight(static_cast<double>(k) / lambda0));
    return s.value();
  }
  const auto table = shell_counts(m, j);
  const auto& r = *table;
  for (std::int64_t i = 1; i <= j; ++i) {
    auto c = r[static_cast<std::size_t>(i)];
    if (!c) continue;
    double w = cutoff.weight(std::sqrt(static_cast<double>(i)) / lambda0);
    if (w == 0.0) continue;
    s.add(static_cast<double>(c) * std::log(static_cast<double>(i)) * w);
  }
  return s.value();
}

EigenproductResult eigenproduct_reglimit(int m, ProductMode mode, std::span<const double> grid,
                                         const BasisSpec& basis, bool smoothing) {
  check_dimension(m);
  if (smoothing && mode != ProductMode::ByCutoff) throw InputError("smoothing applies to cutoff products only");
  EigenproductResult r;
  Samples s;
  for (double p : grid) {
    double v = smoothing ? smoothed_log_product(m, p) : partial_log_product(m, mode, p);
    r.parameters.push_back(p);
    r.values.push_back(v);
    s.push_back(p, v);
  }
  auto lim = extract_reglimit(s, basis);
  r.constant = lim.value;
  r.uncertainty = lim.uncertainty;
  r.fit = lim.report;
  r.reference = log_det_zeta(m);
  return r;
}

}  // namespace regdet
