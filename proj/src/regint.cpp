#include "regdet/regint.hpp"

#include <algorithm>
#include <cmath>

#include "regdet/errors.hpp"

namespace regdet {

double antiderivative_term(double alpha, int k, double x) {
  if (!(x > 0.0)) throw InputError("antiderivative_term needs x > 0");
  if (k < 0) throw InputError("log power must be non-negative");
  const double lx = std::log(x);
  if (alpha == -1.0) return std::pow(lx, k + 1) / (k + 1);
  const double ap1 = alpha + 1.0;
  // sum_j (-1)^j k!/(k-j)! log^{k-j} x / (alpha+1)^{j+1}, times x^{alpha+1}
  double s = 0.0, falling = 1.0, denom = ap1;
  for (int j = 0; j <= k; ++j) {
    double term = falling * std::pow(lx, k - j) / denom;
    s += (j % 2 == 0) ? term : -term;
    falling *= (k - j);
    denom *= ap1;
  }
  return s * std::pow(x, ap1);
}

double finite_part_tail_inf(double alpha, int k, double A) { return -antiderivative_term(alpha, k, A); }

double finite_part_tail_zero(double alpha, int k, double a) { return antiderivative_term(alpha, k, a); }

double finite_part_inf(const Expansion& e, double A) {
  double s = 0.0;
  for (const auto& t : e.terms()) s += t.coeff * finite_part_tail_inf(t.alpha, t.k, A);
  return s;
}

double finite_part_zero(const Expansion& e, double a) {
  double s = 0.0;
  for (const auto& t : e.terms()) s += t.coeff * finite_part_tail_zero(t.alpha, t.k, a);
  return s;
}

TailModel fit_tail(const std::function<double(double)>& f, Side side, double anchor,
                   const BasisSpec& basis, const RegIntOptions& opt) {
  basis.validate();
  const int count = std::max<int>(opt.tail.samples, static_cast<int>(basis.size()) + 4);
  Samples s;
  std::vector<double> xs(count);
  for (int j = 0; j < count; ++j)
    xs[j] = side == Side::Infinity ? anchor * std::pow(opt.tail.ratio, j)
                                   : anchor * std::pow(opt.tail.ratio, -(count - 1 - j));
  for (double x : xs) s.push_back(x, f(x));
  auto rep = fit_expansion(s, basis, opt.fit);
  double scale = 0.0;
  for (double y : s.y) scale = std::max(scale, std::fabs(y));
  if (rep.rms_residual > opt.tail.rel_residual_cap * scale + 1e-300)
    throw TailModelError("tail basis does not fit the samples beyond " + std::to_string(anchor) +
                         " (relative rms " + std::to_string(rep.rms_residual / scale) + ")");
  TailModel t;
  t.side = side;
  t.anchor = anchor;
  t.expansion = rep.to_expansion(side == Side::Infinity ? Direction::ToInfinity : Direction::ToZero);
  t.fit = std::move(rep);
  return t;
}

namespace {

// Resolves a tail rule into a model, or nothing for a proper limit.
std::optional<TailModel> resolve_tail(const IntegrandHandle& f, Side side, double anchor,
                                      const TailRule& rule, const RegIntOptions& opt) {
  if (std::holds_alternative<ProperLimit>(rule)) return std::nullopt;
  const auto& known = side == Side::Zero ? f.at_zero : f.at_infinity;
  const Expansion* supplied = std::get_if<Expansion>(&rule);
  if (!supplied && known) supplied = &*known;
  if (supplied) {
    Direction want = side == Side::Zero ? Direction::ToZero : Direction::ToInfinity;
    if (supplied->direction() != want) throw InputError("tail expansion direction does not match its side");
    TailModel t;
    t.side = side;
    t.anchor = anchor;
    t.expansion = *supplied;
    return t;
  }
  return fit_tail(f.f, side, anchor, std::get<BasisSpec>(rule), opt);
}

double tail_error(const TailModel& t) {
  if (t.fit) return t.fit->rms_residual * t.anchor;
  // Supplied expansion: charge the size of its last term at the anchor.
  if (t.expansion.terms().empty()) return 0.0;
  const auto& last = t.expansion.terms().back();
  return std::fabs(last.coeff * basis_function(last.alpha, last.k, t.anchor)) * t.anchor;
}

}  // namespace

RegIntResult reg_integral(const IntegrandHandle& f, double a, double A, const TailRule& zero,
                          const TailRule& inf, const RegIntOptions& opt) {
  if (!f.f) throw InputError("integrand has no evaluator");
  if (!(a > 0.0) || !(A > a)) throw InputError("regularized integral window must satisfy 0 < a < A");
  RegIntResult r;
  // Wide windows get geometric breakpoints so each panel spans a factor of 4.
  std::vector<double> breaks{a};
  for (double x = 4.0 * a; x < 0.5 * A; x *= 4.0) breaks.push_back(x);
  breaks.push_back(A);
  auto core = integrate_pieces(f.f, std::span<const double>(breaks), opt.quad);
  r.core_part = core.value;
  r.error_estimate = core.error;
  r.zero_tail = resolve_tail(f, Side::Zero, a, zero, opt);
  r.inf_tail = resolve_tail(f, Side::Infinity, A, inf, opt);
  if (r.zero_tail) {
    r.tail_zero_part = finite_part_zero(r.zero_tail->expansion, a);
    r.error_estimate += tail_error(*r.zero_tail);
  }
  if (r.inf_tail) {
    r.tail_inf_part = finite_part_inf(r.inf_tail->expansion, A);
    r.error_estimate += tail_error(*r.inf_tail);
  }
  r.value = r.core_part + r.tail_zero_part + r.tail_inf_part;
  return r;
}

LogDetRegIntResult logdet_via_regint(const std::function<double(double, int)>& trace, int m,
                                     int kernel_dim, const LogDetRegIntOptions& opt) {
  if (m < 1) throw InputError("dimension must be at least 1");
  if (kernel_dim < 0) throw InputError("kernel dimension must be non-negative");
  if (!(opt.split > 0.0) || !(opt.upper > opt.split)) throw InputError("invalid logdet window");
  const int p = 2 * m - 1;
  const double kd = kernel_dim;

  auto near = [&](double z) { return std::pow(z, p) * trace(z, m) - kd / z; };
  auto nq = integrate(near, 0.0, opt.split, opt.regint.quad);
  // The kernel contributes kd times the finite part of z^-1 on (0, split].
  double near_total = nq.value + kd * finite_part_tail_zero(-1.0, 0, opt.split);

  BasisSpec basis = opt.tail_basis;
  if (basis.pairs.empty()) basis.pairs = {{-1.0, 0}, {-3.0, 0}, {-5.0, 0}, {-7.0, 0}, {-9.0, 0}};
  IntegrandHandle h{[&](double z) { return std::pow(z, p) * trace(z, m); }, std::nullopt, std::nullopt};

  LogDetRegIntResult r;
  r.far = reg_integral(h, opt.split, opt.upper, ProperLimit{}, basis, opt.regint);
  r.near_part = -2.0 * near_total;
  r.far_part = -2.0 * r.far.value;
  double harmonic = 0.0;
  for (int j = 1; j < m; ++j) harmonic += 1.0 / j;
  if (m >= 2) {
    if (!opt.zeta_at_zero) throw InputError("log det from the order-m resolvent needs zeta(0) when m >= 2");
    r.correction = -harmonic * *opt.zeta_at_zero;
  }
  r.value = r.near_part + r.far_part + r.correction;
  r.error_estimate = 2.0 * (nq.error + r.far.error_estimate);
  return r;
}

}  // namespace regdet
