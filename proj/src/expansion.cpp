#include "regdet/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "regdet/errors.hpp"

namespace regdet {

double basis_function(double alpha, int k, double x) {
  double v = alpha == 0.0 ? 1.0 : std::pow(x, alpha);
  if (k > 0) v *= std::pow(std::log(x), k);
  return v;
}

namespace {

// Dominance order: larger exponent first at infinity, smaller first at zero;
// within one exponent the higher log power dominates either way.
bool dominates(Direction dir, double a1, int k1, double a2, int k2) {
  if (a1 != a2) return dir == Direction::ToInfinity ? a1 > a2 : a1 < a2;
  return k1 > k2;
}

bool below_remainder(Direction dir, double alpha, const Remainder& r) {
  return dir == Direction::ToInfinity ? alpha <= r.alpha : alpha >= r.alpha;
}

}  // namespace

Expansion::Expansion(Direction dir, std::vector<ExpTerm> terms, std::optional<Remainder> remainder)
    : dir_(dir), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.k < 0) throw InputError("expansion log power must be non-negative");
    if (!std::isfinite(t.alpha) || !std::isfinite(t.coeff))
      throw InputError("expansion terms must be finite");
  }
  std::sort(terms_.begin(), terms_.end(), [dir](const ExpTerm& p, const ExpTerm& q) {
    return dominates(dir, p.alpha, p.k, q.alpha, q.k);
  });
  for (std::size_t i = 1; i < terms_.size(); ++i)
    if (terms_[i].alpha == terms_[i - 1].alpha && terms_[i].k == terms_[i - 1].k)
      throw InputError("duplicate (alpha, k) pair in expansion");

  if (remainder) {
    rem_ = *remainder;
  } else if (terms_.empty()) {
    rem_ = {dir == Direction::ToInfinity ? -1.0 : 1.0, 0};
  } else {
    double last = terms_.back().alpha;
    rem_ = {dir == Direction::ToInfinity ? last - 1.0 : last + 1.0, 0};
  }
  for (const auto& t : terms_)
    if (below_remainder(dir, t.alpha, rem_))
      throw InputError("expansion remainder order must lie beyond every term");
}

double Expansion::operator()(double x) const {
  if (!(x > 0.0)) throw InputError("expansions are evaluated at positive x");
  double s = 0.0;
  for (const auto& t : terms_) s += t.coeff * basis_function(t.alpha, t.k, x);
  return s;
}

double Expansion::coefficient(double alpha, int k) const {
  for (const auto& t : terms_)
    if (t.alpha == alpha && t.k == k) return t.coeff;
  return 0.0;
}

std::vector<BasisPair> Expansion::pairs() const {
  std::vector<BasisPair> p;
  for (const auto& t : terms_) p.push_back({t.alpha, t.k});
  return p;
}

Expansion Expansion::scaled(double c) const {
  auto t = terms_;
  for (auto& x : t) x.coeff *= c;
  return Expansion(dir_, std::move(t), rem_);
}

Expansion operator+(const Expansion& a, const Expansion& b) {
  if (a.dir_ != b.dir_) throw InputError("cannot add expansions with different directions");
  Remainder r = a.rem_;
  bool inf = a.dir_ == Direction::ToInfinity;
  if ((inf && b.rem_.alpha > r.alpha) || (!inf && b.rem_.alpha < r.alpha)) r = b.rem_;
  std::map<BasisPair, double> sum;
  for (const auto& t : a.terms_) sum[{t.alpha, t.k}] += t.coeff;
  for (const auto& t : b.terms_) sum[{t.alpha, t.k}] += t.coeff;
  std::vector<ExpTerm> terms;
  for (const auto& [p, c] : sum)
    if (!below_remainder(a.dir_, p.alpha, r)) terms.push_back({p.alpha, p.k, c});
  return Expansion(a.dir_, std::move(terms), r);
}

double eval_expansion(const Expansion& e, double x) { return e(x); }

double regularized_limit(const Expansion& e) { return e.coefficient(0.0, 0); }

bool BasisSpec::contains_constant() const {
  return std::any_of(pairs.begin(), pairs.end(),
                     [](const BasisPair& p) { return p.alpha == 0.0 && p.k == 0; });
}

void BasisSpec::validate() const {
  if (pairs.empty()) throw InputError("basis is empty");
  std::set<BasisPair> seen;
  for (const auto& p : pairs) {
    if (p.k < 0) throw InputError("basis log power must be non-negative");
    if (!std::isfinite(p.alpha)) throw InputError("basis exponent must be finite");
    if (!seen.insert(p).second) throw InputError("basis pairs must be distinct");
  }
  if (must_contain_constant && !contains_constant())
    throw InputError("basis must contain the constant pair (0,0)");
}

BasisSpec parse_basis(const std::string& text) {
  BasisSpec b;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        b.pairs.push_back({std::stod(item), 0});
      } else {
        b.pairs.push_back({std::stod(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
      }
    } catch (const std::logic_error&) {
      throw InputError("cannot parse basis entry '" + item + "'");
    }
  }
  b.validate();
  return b;
}

std::string format_basis(const BasisSpec& b) {
  std::ostringstream os;
  for (std::size_t i = 0; i < b.pairs.size(); ++i) {
    if (i) os << ',';
    os << b.pairs[i].alpha << ':' << b.pairs[i].k;
  }
  return os.str();
}

void Samples::validate() const {
  if (x.size() != y.size()) throw InputError("sample x and y lengths differ");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) throw InputError("sample abscissae must be positive");
    if (!std::isfinite(y[i])) throw InputError("sample values must be finite");
    if (i > 0 && !(x[i] > x[i - 1])) throw InputError("sample abscissae must be strictly increasing");
  }
}

std::vector<double> geometric_grid(double start, double ratio, int count) {
  if (!(start > 0.0) || !(ratio > 1.0) || count < 1) throw InputError("invalid geometric grid");
  std::vector<double> g(count);
  for (int j = 0; j < count; ++j) g[j] = start * std::pow(ratio, j);
  return g;
}

Samples sample_function(const std::function<double(double)>& f, std::span<const double> xs) {
  Samples s;
  for (double x : xs) s.push_back(x, f(x));
  return s;
}

Samples load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open samples file " + path);
  Samples s;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      std::size_t used = 0;
      double x = std::stod(line.substr(0, comma), &used);
      double y = std::stod(line.substr(comma + 1));
      s.push_back(x, y);
    } catch (const std::logic_error&) {
      if (!first) throw InputError("malformed samples line: " + line);
    }
    first = false;
  }
  s.validate();
  return s;
}

double FitReport::coefficient(double alpha, int k) const {
  auto it = coefficients.find({alpha, k});
  return it == coefficients.end() ? 0.0 : it->second;
}

Expansion FitReport::to_expansion(Direction dir) const {
  std::vector<ExpTerm> t;
  for (const auto& [p, c] : coefficients) t.push_back({p.alpha, p.k, c});
  return Expansion(dir, std::move(t));
}

namespace {

struct Solve {
  Eigen::VectorXd coeff;
  Eigen::VectorXd residual;
  double condition = 1.0;
};

// Column-normalized least squares; throws when the normalized design matrix
// is too ill-conditioned to trust.
Solve solve_least_squares(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::vector<BasisPair>& basis, double cap) {
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index p = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = ys[i];
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = basis_function(basis[j].alpha, basis[j].k, xs[i]);
  }
  Eigen::VectorXd norms = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(norms(j) > 0.0) || !std::isfinite(norms(j)))
      throw FitDegenerateError("basis column vanishes or overflows on the sample grid");
  Eigen::MatrixXd as = a * norms.cwiseInverse().asDiagonal();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(as);
  const auto& sv = svd.singularValues();
  double smin = sv(sv.size() - 1);
  double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= cap))
    throw FitDegenerateError("design matrix condition estimate " + std::to_string(cond) +
                             " exceeds cap");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as);
  Eigen::VectorXd cs = qr.solve(y);
  Solve out;
  out.coeff = cs.cwiseQuotient(norms);
  out.residual = y - a * out.coeff;
  out.condition = std::max(cond, 1.0);
  return out;
}

double constant_of(const Solve& s, const std::vector<BasisPair>& basis) {
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (basis[j].alpha == 0.0 && basis[j].k == 0) return s.coeff(static_cast<Eigen::Index>(j));
  return 0.0;
}

std::optional<double> subgrid_constant(const Samples& s, const std::vector<BasisPair>& basis,
                                       const std::vector<std::size_t>& idx, double cap) {
  if (idx.size() < basis.size()) return std::nullopt;
  std::vector<double> xs, ys;
  for (auto i : idx) {
    xs.push_back(s.x[i]);
    ys.push_back(s.y[i]);
  }
  try {
    return constant_of(solve_least_squares(xs, ys, basis, cap), basis);
  } catch (const FitDegenerateError&) {
    return std::nullopt;
  }
}

}  // namespace

FitReport fit_expansion(const Samples& s, const BasisSpec& b, const FitOptions& opt) {
  s.validate();
  b.validate();
  if (s.size() < b.size() + 2)
    throw InputError("fit needs at least |basis| + 2 samples (" + std::to_string(s.size()) +
                     " given for " + std::to_string(b.size()) + " basis terms)");

  auto full = solve_least_squares(s.x, s.y, b.pairs, opt.condition_cap);
  FitReport r;
  for (std::size_t j = 0; j < b.pairs.size(); ++j)
    r.coefficients[b.pairs[j]] = full.coeff(static_cast<Eigen::Index>(j));
  r.residuals.assign(full.residual.data(), full.residual.data() + full.residual.size());
  r.rms_residual = std::sqrt(full.residual.squaredNorm() / static_cast<double>(s.size()));
  r.condition_estimate = full.condition;

  if (b.contains_constant()) {
    std::vector<std::size_t> even, odd, tail, head;
    for (std::size_t i = 0; i < s.size(); ++i) {
      (i % 2 == 0 ? even : odd).push_back(i);
      if (i > 0) tail.push_back(i);
      if (i + 1 < s.size()) head.push_back(i);
    }
    auto ce = subgrid_constant(s, b.pairs, even, opt.condition_cap);
    auto co = subgrid_constant(s, b.pairs, odd, opt.condition_cap);
    if (ce && co) {
      r.stability_delta = *ce - *co;
    } else {
      auto ct = subgrid_constant(s, b.pairs, tail, opt.condition_cap);
      auto ch = subgrid_constant(s, b.pairs, head, opt.condition_cap);
      if (!ct || !ch) throw FitDegenerateError("subgrid refits for the stability check are degenerate");
      r.stability_delta = *ct - *ch;
    }
  }
  return r;
}

RegLimit extract_reglimit(const Samples& s, const BasisSpec& b, const FitOptions& opt) {
  if (!b.contains_constant()) throw InputError("regularized limit extraction needs (0,0) in the basis");
  RegLimit out;
  out.report = fit_expansion(s, b, opt);
  out.value = out.report.constant();
  out.uncertainty = std::max(out.report.rms_residual, std::fabs(out.report.stability_delta));
  return out;
}

}  // namespace regdet
