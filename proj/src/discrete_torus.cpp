#include "regdet/discrete_torus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

#include "regdet/errors.hpp"

namespace regdet {

namespace {

constexpr std::int64_t kMaxLatticeTerms = std::int64_t(1) << 32;

struct AxisGrid {
  std::vector<double> value;
  std::vector<double> weight;
};

// Indices 0..n-1, or 0..n/2 with multiplicities when folded.
AxisGrid periodic_axis(std::int64_t n, bool fold) {
  AxisGrid g;
  const std::int64_t top = fold ? n / 2 : n - 1;
  for (std::int64_t k = 0; k <= top; ++k) {
    g.value.push_back(omega_1d(n, static_cast<double>(k)));
    bool single = !fold || k == 0 || 2 * k == n;
    g.weight.push_back(single ? 1.0 : 2.0);
  }
  return g;
}

// Indices 0..n of the closed grid; folding pairs x with n-x.
AxisGrid closed_axis(std::int64_t n, bool fold) {
  AxisGrid g;
  const std::int64_t top = fold ? n / 2 : n;
  for (std::int64_t k = 0; k <= top; ++k) {
    g.value.push_back(omega_1d(n, static_cast<double>(k)));
    bool single = !fold || 2 * k == n;
    g.weight.push_back(single ? 1.0 : 2.0);
  }
  return g;
}

template <class Acc, class F>
void sum_inner(const std::vector<const AxisGrid*>& axes, std::size_t level, double lambda,
               double weight, F& f, Acc& acc) {
  if (level == axes.size()) {
    acc.add(weight * f(lambda));
    return;
  }
  const AxisGrid& g = *axes[level];
  for (std::size_t i = 0; i < g.value.size(); ++i)
    sum_inner(axes, level + 1, lambda + g.value[i], weight * g.weight[i], f, acc);
}

// Deterministic parallel lattice sum: the outermost axis is cut into fixed
// contiguous chunks, one accumulator per chunk, reduced in chunk order.
template <class Acc, class F>
double lattice_sum_impl(const std::vector<const AxisGrid*>& axes, F f, unsigned threads) {
  if (axes.empty()) {
    Acc acc;
    acc.add(f(0.0));
    return acc.value();
  }
  double terms = 1.0;
  for (auto* a : axes) terms *= static_cast<double>(a->value.size());
  if (terms > static_cast<double>(kMaxLatticeTerms))
    throw InputError("lattice iteration space too large (" + std::to_string(terms) + " terms)");

  const AxisGrid& outer = *axes[0];
  const std::size_t len = outer.value.size();
  const unsigned chunks = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(len)));
  std::vector<Acc> partial(chunks);
  auto work = [&](unsigned c) {
    std::size_t lo = len * c / chunks, hi = len * (c + 1) / chunks;
    F fc = f;
    for (std::size_t i = lo; i < hi; ++i)
      sum_inner(axes, 1, outer.value[i], outer.weight[i], fc, partial[c]);
  };
  if (chunks == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned c = 0; c < chunks; ++c) pool.emplace_back(work, c);
    for (auto& th : pool) th.join();
  }
  Acc total;
  for (const auto& p : partial) total.add(p);
  return total.value();
}

template <class F>
double lattice_sum(const std::vector<const AxisGrid*>& axes, F f, const LatticeOptions& opt) {
  unsigned threads = opt.threads ? opt.threads : default_thread_count();
  if (opt.precision == Precision::DoubleDouble) return lattice_sum_impl<DoubleDoubleSum>(axes, f, threads);
  return lattice_sum_impl<CompensatedSum>(axes, f, threads);
}

double inverse_power(double v, int alpha) {
  double p = v;
  for (int i = 1; i < alpha; ++i) p *= v;
  return 1.0 / p;
}

void check_z_alpha(double z, int alpha) {
  if (!(z > 0.0) || !std::isfinite(z)) throw InputError("z must be positive and finite");
  if (alpha < 1) throw InputError("alpha must be a positive integer");
}

}  // namespace

DiscreteTorus::DiscreteTorus(int m, std::int64_t n) : m_(m), n_(n), points_(1) {
  if (m < 1 || m > 4) throw InputError("torus dimension must be between 1 and 4");
  if (n < 2) throw InputError("torus needs at least 2 points per axis");
  for (int i = 0; i < m; ++i) {
    if (points_ > (std::int64_t(1) << 62) / n) throw InputError("n^m is not representable");
    points_ *= n;
  }
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("REGDET_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1 && v <= 1024) return static_cast<unsigned>(v);
  }
  return 1;
}

double omega_1d(std::int64_t n, double x) {
  const double nn = static_cast<double>(n);
  double r = std::min(x, nn - x);
  double s = std::sin(std::numbers::pi * r / nn);
  return nn * nn / (std::numbers::pi * std::numbers::pi) * s * s;
}

std::vector<double> spectrum_1d(std::int64_t n) {
  if (n < 2) throw InputError("spectrum needs n >= 2");
  std::vector<double> s(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = omega_1d(n, static_cast<double>(k));
  return s;
}

double omega(const DiscreteTorus& t, std::span<const double> x) {
  if (static_cast<int>(x.size()) != t.m()) throw InputError("omega needs one coordinate per axis");
  double s = 0.0;
  for (double xi : x) {
    if (!(xi >= 0.0 && xi <= static_cast<double>(t.n()))) throw InputError("omega coordinates must lie in [0, n]");
    s += omega_1d(t.n(), xi);
  }
  return s;
}

double log_det(const DiscreteTorus& t, const LatticeOptions& opt) {
  auto axis = periodic_axis(t.n(), opt.use_symmetry);
  std::vector<const AxisGrid*> axes(static_cast<std::size_t>(t.m()), &axis);
  return lattice_sum(axes, [](double lambda) { return lambda > 0.0 ? std::log(lambda) : 0.0; }, opt);
}

double log_det_rescaled(const DiscreteTorus& t, const LatticeOptions& opt) {
  const double nn = static_cast<double>(t.n());
  const double shift = std::log(nn * nn / (4.0 * std::numbers::pi * std::numbers::pi));
  return log_det(t, opt) - static_cast<double>(t.points() - 1) * shift;
}

double resolvent_trace(const DiscreteTorus& t, double z, int alpha, const LatticeOptions& opt) {
  check_z_alpha(z, alpha);
  auto axis = periodic_axis(t.n(), opt.use_symmetry);
  std::vector<const AxisGrid*> axes(static_cast<std::size_t>(t.m()), &axis);
  const double z2 = z * z;
  return lattice_sum(axes, [z2, alpha](double lambda) { return inverse_power(lambda + z2, alpha); }, opt);
}

void SublatticeMask::validate(int m) const {
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  for (int a : axes) {
    if (a < 0 || a >= m) throw InputError("sublattice axis out of range");
    if (seen[static_cast<std::size_t>(a)]) throw InputError("sublattice axes must be distinct");
    seen[static_cast<std::size_t>(a)] = true;
  }
}

double sublattice_sum(const DiscreteTorus& t, const SublatticeMask& mask, double z, int alpha,
                      const LatticeOptions& opt) {
  check_z_alpha(z, alpha);
  mask.validate(t.m());
  auto axis = closed_axis(t.n(), opt.use_symmetry);
  std::vector<const AxisGrid*> axes;
  for (int i = 0; i < t.m(); ++i)
    if (std::find(mask.axes.begin(), mask.axes.end(), i) == mask.axes.end()) axes.push_back(&axis);
  const double z2 = z * z;
  return lattice_sum(axes, [z2, alpha](double lambda) { return inverse_power(lambda + z2, alpha); }, opt);
}

double trace_inclusion_exclusion(const DiscreteTorus& t, double z, const LatticeOptions& opt) {
  const int m = t.m();
  CompensatedSum total;
  for (unsigned bits = 0; bits < (1u << m); ++bits) {
    SublatticeMask mask;
    for (int i = 0; i < m; ++i)
      if (bits & (1u << i)) mask.axes.push_back(i);
    double v = sublattice_sum(t, mask, z, m, opt);
    total.add(mask.axes.size() % 2 == 0 ? v : -v);
  }
  return total.value();
}

std::vector<double> sorted_spectrum(const DiscreteTorus& t) {
  if (t.points() > (std::int64_t(1) << 22)) throw InputError("spectrum too large to materialize");
  auto s = spectrum_1d(t.n());
  std::vector<double> out{0.0};
  for (int d = 0; d < t.m(); ++d) {
    std::vector<double> next;
    next.reserve(out.size() * s.size());
    for (double a : out)
      for (double b : s) next.push_back(a + b);
    out.swap(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace regdet
