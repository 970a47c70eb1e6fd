#include "regdet/euler_maclaurin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/math/special_functions/cos_pi.hpp>

#include "regdet/errors.hpp"
#include "regdet/summation.hpp"

namespace regdet {

namespace {

const std::vector<mpq_class>& bernoulli_cache() {
  static const std::vector<mpq_class> table = [] {
    std::vector<mpq_class> b(kMaxBernoulliIndex + 1);
    b[0] = 1;
    for (int i = 1; i <= kMaxBernoulliIndex; ++i) {
      // sum_{j=0}^{i} C(i+1, j) B_j = 0, solved for B_i
      mpq_class acc = 0;
      mpz_class c = 1;  // C(i+1, j)
      for (int j = 0; j < i; ++j) {
        acc += c * b[static_cast<std::size_t>(j)];
        c = c * (i + 1 - j) / (j + 1);
      }
      b[static_cast<std::size_t>(i)] = -acc / c;
      b[static_cast<std::size_t>(i)].canonicalize();
    }
    return b;
  }();
  return table;
}

double binom(int n, int k) { return boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(k)); }

double factorial(int k) { return boost::math::factorial<double>(static_cast<unsigned>(k)); }

const std::vector<std::vector<double>>& bernoulli_poly_coefficients() {
  static const std::vector<std::vector<double>> table = [] {
    const auto& b = bernoulli_cache();
    std::vector<std::vector<double>> t(kMaxBernoulliIndex + 1);
    for (int i = 0; i <= kMaxBernoulliIndex; ++i) {
      mpz_class c = 1;
      for (int j = 0; j <= i; ++j) {
        t[static_cast<std::size_t>(i)].push_back(mpq_class(c * b[static_cast<std::size_t>(j)]).get_d());
        c = c * (i - j) / (j + 1);
      }
    }
    return t;
  }();
  return table;
}

// omega for real n, symmetric in x <-> n - x
double omega_real(double n, double x) {
  double r = std::clamp(std::min(x, n - x), 0.0, n);
  double s = boost::math::sin_pi(r / n);
  double scale = n / std::numbers::pi;
  return scale * scale * s * s;
}

void check_order(int M) {
  if (M < 1) throw InputError("Euler-Maclaurin order M must be at least 1");
  if (2 * M + 1 > kMaxBernoulliIndex) throw InputError("Euler-Maclaurin order M too large");
}

// 0, 1, ..., n
std::vector<double> integer_breaks(double n) {
  std::vector<double> b;
  auto top = static_cast<std::int64_t>(std::llround(n));
  b.reserve(static_cast<std::size_t>(top + 1));
  for (std::int64_t i = 0; i <= top; ++i) b.push_back(static_cast<double>(i));
  return b;
}

// Geometric refinement towards both ends of [0, n] down to a fraction of scale.
std::vector<double> graded_breaks(double n, double scale) {
  std::vector<double> left{0.0};
  for (double t = scale / 16.0; t < 0.5 * n; t *= 2.0) left.push_back(t);
  std::vector<double> b = left;
  b.push_back(0.5 * n);
  for (auto it = left.rbegin(); it != left.rend(); ++it) b.push_back(n - *it);
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

// H_{k,l} values for k = 1..K at one point; table[k][l].
// Each H_{k,l} is carried as a jet of its derivatives up to order K - k.
std::vector<std::vector<double>> h_table(int K, double alpha, const std::vector<double>& g) {
  std::vector<std::vector<double>> table(static_cast<std::size_t>(K + 1));
  std::vector<std::vector<double>> prev(1, std::vector<double>(static_cast<std::size_t>(K)));
  for (int i = 0; i < K; ++i) prev[0][static_cast<std::size_t>(i)] = -alpha * g[static_cast<std::size_t>(i)];
  table[1] = {prev[0][0]};
  for (int k = 2; k <= K; ++k) {
    const int len = K - k + 1;
    std::vector<std::vector<double>> cur(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(len), 0.0));
    for (int l = 0; l < k; ++l) {
      auto& jet = cur[static_cast<std::size_t>(l)];
      for (int i = 0; i < len; ++i) {
        double v = 0.0;
        if (l <= k - 2) v = prev[static_cast<std::size_t>(l)][static_cast<std::size_t>(i + 1)];
        if (l >= 1) {
          const auto& p = prev[static_cast<std::size_t>(l - 1)];
          double prod = 0.0;
          for (int j = 0; j <= i; ++j) prod += binom(i, j) * p[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(i - j)];
          v -= (alpha + l) * prod;
        }
        jet[static_cast<std::size_t>(i)] = v;
      }
    }
    table[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(k));
    for (int l = 0; l < k; ++l) table[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = cur[static_cast<std::size_t>(l)][0];
    prev = std::move(cur);
  }
  return table;
}

QuadOptions nested_options(const QuadOptions& q, int integrals_below) {
  QuadOptions o = q;
  if (integrals_below > 0) {
    o.rel_tol = q.rel_tol * std::pow(10.0, integrals_below);
    o.l1_rel_floor = std::max(q.l1_rel_floor, o.rel_tol);
  }
  return o;
}

// Nested application of the per-axis operators to (sum omega + c)^{-a}.
class PatternEvaluator {
 public:
  PatternEvaluator(double n, int M, std::vector<int> betas, const QuadOptions& q)
      : n_(n), M_(M), K_(2 * M + 1), betas_(std::move(betas)), bern_(M),
        breaks_(integer_breaks(n)), caches_(betas_.size()) {
    // Integrals with further integrals inside only see their integrand to the
    // inner tolerance.
    int integrals_below = 0;
    q_.resize(betas_.size());
    for (std::size_t i = betas_.size(); i-- > 0;) {
      q_[i] = nested_options(q, integrals_below);
      if (betas_[i] == 1 || betas_[i] == 3) ++integrals_below;
    }
  }

  double value(int a, double c) { return G(0, a, c); }

 private:
  struct Key {
    double x;
    int a;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<double>{}(k.x) ^ (std::hash<int>{}(k.a) * 0x9e3779b97f4a7c15ULL);
    }
  };
  using Cache = std::unordered_map<Key, std::vector<std::vector<double>>, KeyHash>;

  const std::vector<std::vector<double>>& h_at(std::size_t level, double x, int a) {
    auto& cache = caches_[level];
    auto it = cache.find({x, a});
    if (it != cache.end()) return it->second;
    auto jet = omega_derivative_jet(n_, x, K_ - 1);
    return cache.emplace(Key{x, a}, h_table(K_, a, jet)).first->second;
  }

  // k-th x-derivative of G(level + 1, a, c + omega(x)).
  double D(std::size_t level, int k, int a, double c, double x) {
    const auto& h = h_at(level, x, a)[static_cast<std::size_t>(k)];
    const double shifted = c + omega_real(n_, x);
    double s = 0.0;
    if (level + 1 == betas_.size()) {
      const double inv = 1.0 / shifted;
      double pw = std::pow(inv, a + 1);
      for (int l = 0; l < k; ++l, pw *= inv) s += h[static_cast<std::size_t>(l)] * pw;
      return s;
    }
    for (int l = 0; l < k; ++l) {
      double hl = h[static_cast<std::size_t>(l)];
      if (hl == 0.0) continue;
      s += hl * G(level + 1, a + l + 1, shifted);
    }
    return s;
  }

  double G(std::size_t level, int a, double c) {
    if (level == betas_.size()) return std::pow(c, -a);
    switch (betas_[level]) {
      case 1: {
        auto f = [&](double x) { return G(level + 1, a, c + omega_real(n_, x)); };
        return integrate_pieces(f, std::span<const double>(breaks_), q_[level]).value;
      }
      case 2: {
        double s = 0.0;
        for (int k = 1; k <= M_; ++k) {
          double w = bern_.value(2 * k) / factorial(2 * k);
          s += w * (D(level, 2 * k - 1, a, c, n_) - D(level, 2 * k - 1, a, c, 0.0));
        }
        return s;
      }
      case 3: {
        const int p = K_;
        auto f = [&](double x) { return periodic_bernoulli(p, x) * D(level, p, a, c, x); };
        return integrate_pieces(f, std::span<const double>(breaks_), q_[level]).value / factorial(p);
      }
      case 4:
        return 0.5 * (G(level + 1, a, c + omega_real(n_, 0.0)) + G(level + 1, a, c + omega_real(n_, n_)));
      default:
        throw InputError("pattern entries must lie in {1, 2, 3, 4}");
    }
  }

  double n_;
  int M_, K_;
  std::vector<int> betas_;
  BernoulliTable bern_;
  std::vector<QuadOptions> q_;
  std::vector<double> breaks_;
  std::vector<Cache> caches_;
};

long long binom_int(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

mpq_class bernoulli_number(int i) {
  if (i < 0) throw InputError("Bernoulli index must be non-negative");
  if (i > kMaxBernoulliIndex) throw InputError("Bernoulli index exceeds the supported cap");
  return bernoulli_cache()[static_cast<std::size_t>(i)];
}

BernoulliTable::BernoulliTable(int M) : M_(M) {
  check_order(M);
  for (int i = 0; i <= 2 * M + 1; ++i) {
    exact_.push_back(bernoulli_number(i));
    value_.push_back(exact_.back().get_d());
  }
}

const mpq_class& BernoulliTable::exact(int i) const {
  if (i < 0 || i > 2 * M_ + 1) throw InputError("Bernoulli index outside the table");
  return exact_[static_cast<std::size_t>(i)];
}

double BernoulliTable::value(int i) const {
  if (i < 0 || i > 2 * M_ + 1) throw InputError("Bernoulli index outside the table");
  return value_[static_cast<std::size_t>(i)];
}

double bernoulli_polynomial(int i, double t) {
  if (i < 0) throw InputError("Bernoulli polynomial degree must be non-negative");
  if (i > kMaxBernoulliIndex) throw InputError("Bernoulli index exceeds the supported cap");
  // Horner in t over coefficients C(i, j) B_j of t^{i-j}
  const auto& c = bernoulli_poly_coefficients()[static_cast<std::size_t>(i)];
  double s = 0.0;
  for (double a : c) s = s * t + a;
  return s;
}

double periodic_bernoulli(int i, double x) {
  if (i < 1) throw InputError("periodic Bernoulli function needs i >= 1");
  return bernoulli_polynomial(i, x - std::floor(x));
}

QuadOptions em_quad_defaults() {
  QuadOptions q;
  q.abs_tol = 1e-16;
  q.rel_tol = 1e-12;
  q.max_intervals = 200000;
  return q;
}

double apply_em_operator(int beta, const DerivativeOracle& u, std::int64_t n, int M, const QuadOptions& q) {
  check_order(M);
  if (n < 1) throw InputError("Euler-Maclaurin range needs n >= 1");
  const double nn = static_cast<double>(n);
  auto breaks = integer_breaks(nn);
  switch (beta) {
    case 1: {
      auto f = [&](double x) { return u(0, x); };
      return integrate_pieces(f, std::span<const double>(breaks), q).value;
    }
    case 2: {
      BernoulliTable b(M);
      CompensatedSum s;
      for (int k = 1; k <= M; ++k)
        s.add(b.value(2 * k) / factorial(2 * k) * (u(2 * k - 1, nn) - u(2 * k - 1, 0.0)));
      return s.value();
    }
    case 3: {
      const int p = 2 * M + 1;
      auto f = [&](double x) { return periodic_bernoulli(p, x) * u(p, x); };
      return integrate_pieces(f, std::span<const double>(breaks), q).value / factorial(p);
    }
    case 4:
      return 0.5 * (u(0, nn) + u(0, 0.0));
    default:
      throw InputError("operator index must lie in {1, 2, 3, 4}");
  }
}

EMParts em_sum_1d(const DerivativeOracle& u, std::int64_t n, int M, const QuadOptions& q) {
  EMParts p;
  p.integral = apply_em_operator(1, u, n, M, q);
  p.derivative_boundary = apply_em_operator(2, u, n, M, q);
  p.remainder = apply_em_operator(3, u, n, M, q);
  p.endpoint_average = apply_em_operator(4, u, n, M, q);
  return p;
}

std::vector<double> omega_derivative_jet(double n, double x, int order) {
  if (order < 0) throw InputError("derivative order must be non-negative");
  if (!(n > 0.0)) throw InputError("n must be positive");
  // g(x) = -g(n - x) and in general g^{(j)}(x) = (-1)^{j+1} g^{(j)}(n - x).
  const bool mirrored = x > 0.5 * n;
  const double r = mirrored ? n - x : x;
  const double u = 2.0 * r / n;
  const double s = boost::math::sin_pi(u), c = boost::math::cos_pi(u);
  const double w = 2.0 * std::numbers::pi / n;
  std::vector<double> jet(static_cast<std::size_t>(order + 1));
  double scale = n / std::numbers::pi;
  for (int j = 0; j <= order; ++j) {
    double v = 0.0;
    switch (j % 4) {
      case 0: v = s; break;
      case 1: v = c; break;
      case 2: v = -s; break;
      default: v = -c; break;
    }
    v *= scale;
    if (mirrored && j % 2 == 0) v = -v;
    jet[static_cast<std::size_t>(j)] = v;
    scale *= w;
  }
  return jet;
}

std::vector<double> h_functionals(int k, double alpha, double n, double x) {
  if (k < 1) throw InputError("H_{k,l} needs k >= 1");
  auto jet = omega_derivative_jet(n, x, k - 1);
  return h_table(k, alpha, jet)[static_cast<std::size_t>(k)];
}

double h_recursion_eval(int k, int l, double n, double x, double alpha) {
  if (k < 1 || l < 0 || l > k - 1) throw InputError("H_{k,l} needs 0 <= l <= k-1");
  return h_functionals(k, alpha, n, x)[static_cast<std::size_t>(l)];
}

double power_derivative(int k, double alpha, double n, double x, double c) {
  const double f = omega_real(n, x) + c;
  if (k == 0) return std::pow(f, -alpha);
  auto h = h_functionals(k, alpha, n, x);
  double s = 0.0;
  for (int l = 0; l < k; ++l) s += h[static_cast<std::size_t>(l)] * std::pow(f, -alpha - l - 1);
  return s;
}

int default_em_order(int m) { return (3 * m + 2) / 2; }

double em_pattern_value(int d, double n, double z, int alpha, std::span<const int> beta, int M,
                        const EMDecomposeOptions& opt) {
  check_order(M);
  if (d < 0 || static_cast<std::size_t>(d) != beta.size()) throw InputError("pattern length must equal the number of axes");
  if (!(z > 0.0)) throw InputError("z must be positive");
  if (!(n >= 1.0) || n != std::floor(n)) throw InputError("n must be a positive integer");
  std::vector<int> order = opt.axis_order;
  if (order.empty()) {
    for (int i = 0; i < d; ++i) order.push_back(i);
  } else {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < d; ++i)
      if (static_cast<int>(sorted.size()) != d || sorted[static_cast<std::size_t>(i)] != i)
        throw InputError("axis order must be a permutation of the axes");
  }
  std::vector<int> betas;
  for (int axis : order) {
    int b = beta[static_cast<std::size_t>(axis)];
    if (b < 1 || b > 4) throw InputError("pattern entries must lie in {1, 2, 3, 4}");
    betas.push_back(b);
  }
  PatternEvaluator ev(n, M, std::move(betas), opt.quad);
  return ev.value(alpha, z * z);
}

EMDecomposition em_decompose_md(const DiscreteTorus& t, double z, int alpha, int M, const EMDecomposeOptions& opt) {
  const int m = t.m();
  if (m > 2) throw InputError("full Euler-Maclaurin decomposition is limited to m <= 2");
  if (2 * M < 3 * m + 1) throw InputError("Euler-Maclaurin order must satisfy M >= (3m+1)/2");
  if (alpha < 1) throw InputError("alpha must be a positive integer");
  EMDecomposition r;
  r.m = m;
  r.n = t.n();
  r.z = z;
  r.alpha = alpha;
  r.M = M;
  const double n = static_cast<double>(t.n());
  int count = 1;
  for (int i = 0; i < m; ++i) count *= 4;
  CompensatedSum total;
  for (int code = 0; code < count; ++code) {
    std::vector<int> beta(static_cast<std::size_t>(m));
    int rem = code;
    for (int i = m - 1; i >= 0; --i) {
      beta[static_cast<std::size_t>(i)] = rem % 4 + 1;
      rem /= 4;
    }
    double v = em_pattern_value(m, n, z, alpha, beta, M, opt);
    r.patterns[beta] = v;
    total.add(v);
  }
  r.total = total.value();
  r.direct = closed_grid_sum(m, t.n(), z, alpha);
  return r;
}

double closed_grid_sum(int d, std::int64_t n, double z, int alpha) {
  if (d < 0 || d > 4) throw InputError("closed grid sums support 0 <= d <= 4");
  if (n < 1) throw InputError("n must be positive");
  const double nn = static_cast<double>(n);
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  for (std::int64_t i = 0; i <= n; ++i) w[static_cast<std::size_t>(i)] = omega_real(nn, static_cast<double>(i));
  CompensatedSum s;
  std::function<void(int, double)> rec = [&](int level, double c) {
    if (level == d) {
      s.add(std::pow(c, -alpha));
      return;
    }
    for (double v : w) rec(level + 1, c + v);
  };
  rec(0, z * z);
  return s.value();
}

double homogeneous_integral(int d, double n, double z, int alpha, const QuadOptions& q) {
  if (d < 0) throw InputError("dimension must be non-negative");
  if (!(n > 0.0) || !(z > 0.0)) throw InputError("n and z must be positive");
  std::function<double(int, double)> rec = [&](int level, double c) -> double {
    if (level == d) return std::pow(c, -alpha);
    auto f = [&](double x) { return rec(level + 1, c + omega_real(n, x)); };
    auto br = graded_breaks(n, std::sqrt(c));
    return integrate_pieces(f, std::span<const double>(br), nested_options(q, d - level - 1)).value;
  };
  return rec(0, z * z);
}

HomogeneousDecomposition homogeneous_decomposition(int m) {
  if (m < 1 || m > 4) throw InputError("m must lie in 1..4");
  HomogeneousDecomposition h;
  h.m = m;
  // Pattern with p integral axes out of m - k free axes contributes C(m-k, p) I_p,
  // I_p homogeneous of order p - 2m; collect the integer weight per p.
  for (int j = 0; j <= m; ++j) {
    const int p = m - j;
    long long weight = 0;
    for (int k = 0; k <= m - p; ++k) weight += (k % 2 ? -1 : 1) * binom_int(m, k) * binom_int(m - k, p);
    HomogeneousTerm term;
    term.order = -m - j;
    term.eval = [p, m, weight](double z, double n) {
      if (weight == 0) return 0.0;
      // Converged to round-off so that the remainder is not swamped by quadrature error.
      QuadOptions q = em_quad_defaults();
      q.rel_tol = 1e-15;
      return static_cast<double>(weight) * homogeneous_integral(p, n, z, m, q);
    };
    h.terms.push_back(std::move(term));
  }
  auto terms = h.terms;
  h.remainder = [m, terms](double z, double n) {
    if (n != std::floor(n) || n < 2.0) throw InputError("the remainder needs an integer n >= 2");
    DiscreteTorus t(m, static_cast<std::int64_t>(n));
    double tr = resolvent_trace(t, z, m);
    CompensatedSum s;
    s.add(tr);
    for (const auto& term : terms) s.add(-term.eval(z, n));
    return s.value();
  };
  return h;
}

SineFactorReport sine_factor_bound_check(int k, int l, std::span<const double> n_grid,
                                         std::span<const double> x_fractions, double alpha) {
  if (k < 1 || k % 2 == 0) throw InputError("the sine-factor estimate is stated for odd k");
  if (l < 0 || l > k - 1) throw InputError("H_{k,l} needs 0 <= l <= k-1");
  if (n_grid.empty() || x_fractions.empty()) throw InputError("empty sampling grid");
  SineFactorReport r;
  r.k = k;
  r.l = l;
  r.alpha = alpha;
  const int p = 2 * (l + 1) - k;
  r.n_branch = p <= 0;
  for (double n : n_grid) {
    double worst = 0.0;
    for (double u : x_fractions) {
      if (!(u > 0.0 && u <= 1.0)) throw InputError("x fractions must lie in (0, 1]");
      double x = u * n;
      double bound = r.n_branch ? std::pow(n, p) : std::pow(x, p);
      double h = h_recursion_eval(k, l, n, x, alpha);
      worst = std::max(worst, std::fabs(h) / bound);
    }
    r.n_values.push_back(n);
    r.max_ratio.push_back(worst);
    r.constant = std::max(r.constant, worst);
  }
  r.bounded = std::isfinite(r.constant) && r.constant <= 4.0 * r.max_ratio.front() + 1e-300;
  return r;
}

CancellationReport h_minus_2m_cancellation(int m, std::span<const double> z_grid) {
  if (m < 1 || m > 4) throw InputError("m must lie in 1..4");
  CancellationReport r;
  for (int k = 0; k <= m; ++k) r.binomial_sum += (k % 2 ? -1 : 1) * binom_int(m, k);
  for (double z : z_grid) {
    CompensatedSum s;
    for (int k = 0; k <= m; ++k) {
      std::vector<int> beta(static_cast<std::size_t>(m - k), 4);
      double v = em_pattern_value(m - k, 2.0, z, m, beta, 1);
      s.add(static_cast<double>((k % 2 ? -1 : 1) * binom_int(m, k)) * v);
    }
    double res = std::fabs(s.value());
    r.z_values.push_back(z);
    r.residual.push_back(res);
    r.relative_residual.push_back(res * std::pow(z, 2 * m));
  }
  return r;
}

RemainderReport remainder_uniformity_check(int m, int M, std::span<const double> z_grid,
                                           std::span<const std::int64_t> n_grid, bool pattern_crosscheck) {
  if (m < 1 || m > 2) throw InputError("remainder check is limited to m <= 2");
  check_order(M);
  if (z_grid.empty() || n_grid.empty()) throw InputError("empty grid");
  const double eps = std::numeric_limits<double>::epsilon();
  auto hd = homogeneous_decomposition(m);
  RemainderReport r;
  r.m = m;
  r.M = M;
  r.z_values.assign(z_grid.begin(), z_grid.end());
  r.n_values.assign(n_grid.begin(), n_grid.end());
  r.uniform = true;
  std::vector<double> sup;
  for (double z : z_grid) {
    std::vector<double> hs, floors, pats;
    for (std::int64_t n : n_grid) {
      const double nn = static_cast<double>(n);
      double tr = resolvent_trace(DiscreteTorus(m, n), z, m);
      double hsum = 0.0, habs = 0.0;
      for (const auto& term : hd.terms) {
        double v = term.eval(z, nn);
        hsum += v;
        habs += std::fabs(v);
      }
      hs.push_back(tr - hsum);
      floors.push_back(64.0 * eps * (std::fabs(tr) + habs));
      if (pattern_crosscheck) {
        // patterns containing a 3, across inclusion-exclusion levels
        CompensatedSum s;
        for (int k = 0; k < m; ++k) {
          const int d = m - k;
          int count = 1;
          for (int i = 0; i < d; ++i) count *= 4;
          for (int code = 0; code < count; ++code) {
            std::vector<int> beta(static_cast<std::size_t>(d));
            int rem = code;
            bool has3 = false;
            for (int i = d - 1; i >= 0; --i) {
              beta[static_cast<std::size_t>(i)] = rem % 4 + 1;
              has3 = has3 || beta[static_cast<std::size_t>(i)] == 3;
              rem /= 4;
            }
            if (!has3) continue;
            double v = em_pattern_value(d, nn, z, m, beta, M);
            s.add(static_cast<double>((k % 2 ? -1 : 1) * binom_int(m, k)) * v);
          }
        }
        pats.push_back(s.value());
        r.max_pattern_mismatch = std::max(r.max_pattern_mismatch, std::fabs(s.value() - hs.back()));
      }
    }
    // One floor per z so that values lost in round-off compare as equal.
    const double fl = *std::max_element(floors.begin(), floors.end());
    double top = fl;
    for (double h : hs) top = std::max(top, std::fabs(h));
    double first = std::max(std::fabs(hs.front()), fl);
    double ratio = top / first;
    sup.push_back(top);
    r.scaled_sup.push_back(top * std::pow(z, 2 * m + 2));
    r.uniformity_ratio.push_back(ratio);
    r.uniform = r.uniform && ratio <= 2.0;
    r.remainder.push_back(std::move(hs));
    r.noise_floor.push_back(std::move(floors));
    if (pattern_crosscheck) r.pattern_remainder.push_back(std::move(pats));
  }
  r.decaying = true;
  for (std::size_t i = 1; i < z_grid.size(); ++i) {
    if (std::fabs(z_grid[i] - 2.0 * z_grid[i - 1]) > 1e-12 * z_grid[i]) continue;
    double floor_max = *std::max_element(r.noise_floor[i].begin(), r.noise_floor[i].end());
    bool dropped = sup[i] <= sup[i - 1] / std::pow(2.0, 2 * m + 1);
    bool at_floor = sup[i] <= floor_max;
    r.decaying = r.decaying && (dropped || at_floor);
  }
  return r;
}

}  // namespace regdet
