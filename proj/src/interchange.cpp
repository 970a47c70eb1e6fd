#include "regdet/interchange.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <boost/math/special_functions/binomial.hpp>

#include "regdet/errors.hpp"

namespace regdet {

void check_hypotheses(const HomogeneousFn& f) {
  if (!f.f) throw InputError("function '" + f.name + "' has no evaluator");
  if (f.expansion_z.direction() != Direction::ToInfinity || f.expansion_n.direction() != Direction::ToInfinity)
    throw InputError("expansions of '" + f.name + "' must be taken at infinity");
  if (!(f.expansion_z.remainder().alpha < -1.0))
    throw InputError("z-expansion of '" + f.name + "' must be carried below z^-1");
  if (!(f.expansion_n.remainder().alpha < std::min(0.0, f.degree + 1.0)))
    throw InputError("n-expansion of '" + f.name + "' must be carried below n^min(0, d+1)");
}

double homogeneity_error(const HomogeneousFn& f, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logu(std::log(0.1), std::log(10.0));
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    double z = std::exp(logu(rng)), n = std::exp(logu(rng)), t = std::exp(logu(rng));
    double ref = std::pow(t, f.degree) * f.f(z, n);
    double v = f.f(t * z, t * n);
    double scale = std::fabs(ref);
    worst = std::max(worst, scale > 0.0 ? std::fabs(v - ref) / scale : std::fabs(v));
  }
  return worst;
}

Expansion zero_expansion(const HomogeneousFn& f) {
  std::vector<ExpTerm> terms;
  for (const auto& t : f.expansion_n.terms())
    terms.push_back({f.degree - t.alpha, t.k, (t.k % 2 ? -1.0 : 1.0) * t.coeff});
  const auto& rem = f.expansion_n.remainder();
  return Expansion(Direction::ToZero, terms, Remainder{f.degree - rem.alpha, rem.log_power});
}

Expansion scaled_expansion_z(const HomogeneousFn& f, double n) {
  // f(z, n) = n^d f(z/n, 1) and log(z/n) = log z - log n
  const double ln = std::log(n);
  std::map<BasisPair, double> acc;
  for (const auto& t : f.expansion_z.terms()) {
    const double c = t.coeff * std::pow(n, f.degree - t.alpha);
    for (int i = 0; i <= t.k; ++i) {
      double b = boost::math::binomial_coefficient<double>(static_cast<unsigned>(t.k), static_cast<unsigned>(i));
      acc[{t.alpha, i}] += c * b * std::pow(-ln, t.k - i);
    }
  }
  std::vector<ExpTerm> terms;
  for (const auto& [p, c] : acc) terms.push_back({p.alpha, p.k, c});
  return Expansion(Direction::ToInfinity, terms, f.expansion_z.remainder());
}

double correction_term(const HomogeneousFn& f, const InterchangeOptions& opt) {
  check_hypotheses(f);
  if (std::fabs(f.degree + 1.0) > opt.degree_tol) return 0.0;
  IntegrandHandle h{[&f](double z) { return f.f(z, 1.0); }, zero_expansion(f), f.expansion_z};
  const double w = opt.corr_window;
  return reg_integral(h, 1.0 / w, w, *h.at_zero, *h.at_infinity, opt.regint).value;
}

BasisSpec lhs_basis(const HomogeneousFn& f) {
  const double d1 = f.degree + 1.0;
  std::set<BasisPair> pairs{{d1, 0}, {0.0, 0}};
  for (const auto& t : f.expansion_n.terms()) {
    const int top = t.alpha == d1 ? t.k + 1 : t.k;
    for (int i = 0; i <= top; ++i) pairs.insert({t.alpha, i});
  }
  for (const auto& t : f.expansion_z.terms())
    if (t.alpha == -1.0)
      for (int i = 0; i <= t.k + 1; ++i) pairs.insert({d1, i});
  pairs.insert({f.expansion_n.remainder().alpha, 0});
  return BasisSpec(std::vector<BasisPair>(pairs.rbegin(), pairs.rend()), true);
}

LhsResult lhs_interchange(const HomogeneousFn& f, const InterchangeOptions& opt) {
  check_hypotheses(f);
  std::vector<double> grid = opt.n_grid;
  if (grid.empty()) grid = geometric_grid(16.0, 2.0, 9);
  BasisSpec basis = opt.lhs_basis ? *opt.lhs_basis : lhs_basis(f);
  LhsResult r;
  Samples s;
  for (double n : grid) {
    if (!(n >= 1.0)) throw InputError("n grid values must be at least 1");
    auto tail = scaled_expansion_z(f, n);
    IntegrandHandle h{[&f, n](double z) { return f.f(z, n); }, std::nullopt, tail};
    double v = reg_integral(h, 1.0, opt.window_factor * std::max(n, 1.0), ProperLimit{}, tail, opt.regint).value;
    r.n_values.push_back(n);
    r.integrals.push_back(v);
    s.push_back(n, v);
  }
  auto lim = extract_reglimit(s, basis);
  r.value = lim.value;
  r.uncertainty = lim.uncertainty;
  r.fit = lim.report;
  return r;
}

double limit_integral(const HomogeneousFn& f) {
  check_hypotheses(f);
  double s = 0.0;
  for (const auto& t : f.expansion_n.terms())
    if (t.alpha == 0.0) s += (t.k % 2 ? -1.0 : 1.0) * t.coeff * finite_part_tail_inf(f.degree, t.k, 1.0);
  return s;
}

double rhs_interchange(const HomogeneousFn& f, const InterchangeOptions& opt) {
  return limit_integral(f) + correction_term(f, opt);
}

InterchangeReport check_interchange(const HomogeneousFn& f, double tol, const InterchangeOptions& opt) {
  check_hypotheses(f);
  InterchangeReport r;
  r.name = f.name;
  r.degree = f.degree;
  r.tol = tol;
  r.homogeneity_error = homogeneity_error(f);
  if (!(r.homogeneity_error <= opt.homogeneity_tol))
    throw InputError("function '" + f.name + "' is not homogeneous of degree " + std::to_string(f.degree));
  auto lhs = lhs_interchange(f, opt);
  r.lhs = lhs.value;
  r.lhs_uncertainty = lhs.uncertainty;
  r.corr = correction_term(f, opt);
  r.rhs = limit_integral(f) + r.corr;
  r.abs_diff = std::fabs(r.lhs - r.rhs);
  r.pass = r.abs_diff <= tol;
  return r;
}

namespace {

// sum_i sign^i * c_i * x^(start - step*i)
Expansion series(double start, double step, std::vector<double> coeffs, double remainder) {
  std::vector<ExpTerm> t;
  for (std::size_t i = 0; i < coeffs.size(); ++i) t.push_back({start - step * static_cast<double>(i), 0, coeffs[i]});
  return Expansion(Direction::ToInfinity, t, Remainder{remainder, 0});
}

}  // namespace

std::vector<HomogeneousFn> builtin_registry() {
  std::vector<HomogeneousFn> r;
  r.push_back({"n/(z^2+n^2)", [](double z, double n) { return n / (z * z + n * n); }, -1.0,
               series(-2, 2, {1, -1, 1, -1}, -10), series(-1, 2, {1, -1, 1, -1}, -9)});
  r.push_back({"n^2/(z^2+n^2)", [](double z, double n) { return n * n / (z * z + n * n); }, 0.0,
               series(-2, 2, {1, -1, 1, -1}, -10), series(0, 2, {1, -1, 1, -1}, -8)});
  r.push_back({"z^-2", [](double z, double) { return 1.0 / (z * z); }, -2.0,
               series(-2, 0, {1}, -20), series(0, 0, {1}, -20)});
  r.push_back({"n^3/(z^2+n^2)^2",
               [](double z, double n) {
                 double q = z * z + n * n;
                 return n * n * n / (q * q);
               },
               -1.0, series(-4, 2, {1, -2, 3, -4}, -12), series(-1, 2, {1, -2, 3, -4}, -9)});
  r.push_back({"n/(z(z+n))", [](double z, double n) { return n / (z * (z + n)); }, -1.0,
               series(-2, 1, {1, -1, 1, -1}, -6), series(0, 1, {1, -1, 1, -1, 1}, -5)});
  return r;
}

const HomogeneousFn& registry_function(const std::string& name) {
  static const std::vector<HomogeneousFn> reg = builtin_registry();
  for (const auto& f : reg)
    if (f.name == name) return f;
  throw InputError("unknown test function '" + name + "'");
}

}  // namespace regdet
