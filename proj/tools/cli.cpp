#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "regdet/discrete_torus.hpp"
#include "regdet/errors.hpp"
#include "regdet/euler_maclaurin.hpp"
#include "regdet/expansion.hpp"
#include "regdet/interchange.hpp"
#include "regdet/io.hpp"
#include "regdet/pipelines.hpp"
#include "regdet/regint.hpp"
#include "regdet/smooth_torus.hpp"
#include "regdet/spanning_trees.hpp"

namespace regdet::cli {

namespace {

constexpr double kPi = std::numbers::pi;

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw InputError("");
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse " + what + " '" + s + "'");
  }
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
  auto c1 = text.find(':');
  auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
  if (c2 == std::string::npos) throw InputError("grid must be start:stop:xRatio, got '" + text + "'");
  std::string r = text.substr(c2 + 1);
  if (r.empty() || r[0] != 'x') throw InputError("grid ratio must be written xRatio, got '" + r + "'");
  GridSpec g;
  g.start = parse_number(text.substr(0, c1), "grid start");
  g.stop = parse_number(text.substr(c1 + 1, c2 - c1 - 1), "grid stop");
  g.ratio = parse_number(r.substr(1), "grid ratio");
  if (!(g.start > 0.0) || !(g.stop >= g.start)) throw InputError("grid needs 0 < start <= stop");
  if (!(g.ratio >= 1.2)) throw InputError("grid ratio must be at least 1.2");
  return g;
}

std::vector<double> real_grid(const GridSpec& g) {
  std::vector<double> xs;
  for (int j = 0;; ++j) {
    double x = g.start * std::pow(g.ratio, j);
    if (x > g.stop * (1.0 + 1e-12)) break;
    xs.push_back(x);
  }
  return xs;
}

std::vector<std::int64_t> integer_grid(const GridSpec& g) {
  std::vector<std::int64_t> ns;
  for (double x : real_grid(g)) {
    auto n = static_cast<std::int64_t>(std::llround(x));
    if (ns.empty() || n != ns.back()) ns.push_back(n);
  }
  return ns;
}

namespace {

struct Report {
  std::string criterion;
  json results = json::object();
  bool pass = true;
  std::string summary;
  std::string x_name = "x", y_name = "value";
  std::vector<std::pair<double, double>> series;
  std::vector<std::pair<double, double>> residuals;  // fit residuals per sample
};

struct Common {
  std::string json_path;
  std::string csv_path;
  unsigned threads = 0;
  std::string precision = "compensated";
  std::string config_path;

  LatticeOptions lattice() const {
    LatticeOptions o;
    o.threads = threads;
    o.precision = precision == "double-double" ? Precision::DoubleDouble : Precision::Compensated;
    return o;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--json", c.json_path, "write the JSON report here");
  sub->add_option("--csv", c.csv_path, "write the x,value series here");
  sub->add_option("--threads", c.threads, "worker threads (0: REGDET_THREADS or 1)")->capture_default_str();
  sub->add_option("--precision", c.precision, "lattice summation precision")
      ->check(CLI::IsMember({"compensated", "double-double"}))
      ->capture_default_str();
  sub->add_option("--config", c.config_path, "flat key = value file; flags override it");
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw InputError(what + " must be positive");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

json fit_summary(const FitReport& f) { return fit_to_json(f); }

// Subcommand state lives here so CLI11 can bind to it.
struct Args {
  Common common;
  int m = 1;
  std::int64_t n = 0;
  std::string n_grid;
  std::string z_grid;
  double z = 1.0;
  int alpha = 0;
  double tol = 0.0;
  bool rescaled = false;
  bool via_regint = false;
  bool sorted = false;
  bool check_dual = false;
  bool cjk = false;
  bool all = false;
  std::string function;
  std::string basis;
  std::string basis_zero;
  std::string basis_inf;
  std::string integrand = "log-kernel";
  double lambda = 1.0;
  double window_lo = 1e-3;
  double window_hi = 64.0;
  int M = 0;
  std::vector<int> pattern;
  std::string mode;
  int k = 1;
  int l = 0;
  std::string x_fractions = "0.01,0.05,0.1,0.25,0.4";
  std::string residuals_csv;
  double final_tol = 1e-5;
  double deriv_tol = 1e-6;
  std::string grid;
  bool smooth = false;
  bool no_smooth = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw InputError(what + " is empty");
  return out;
}

// Either "start:stop:xRatio" or a comma-separated list.
std::vector<double> parse_values(const std::string& text, const std::string& what) {
  if (text.find(':') != std::string::npos) return real_grid(parse_grid(text));
  return parse_list(text, what);
}

std::vector<std::int64_t> parse_int_values(const std::string& text, const std::string& what) {
  if (text.find(':') != std::string::npos) return integer_grid(parse_grid(text));
  std::vector<std::int64_t> ns;
  for (double v : parse_list(text, what)) {
    if (v != std::floor(v)) throw InputError(what + " must hold integers");
    ns.push_back(static_cast<std::int64_t>(v));
  }
  return ns;
}

double tol_or(double tol, double fallback) {
  if (tol == 0.0) return fallback;
  require_positive(tol, "tolerance");
  return tol;
}

double zeta_det_closed_form(int m) {
  if (m == 1) return std::log(4.0 * kPi * kPi);
  if (m == 2) return std::log(std::pow(boost::math::tgamma(0.25), 4) / (4.0 * kPi));
  return std::nan("");
}

// ---- subcommands ----

Report cmd_spectrum(const Args& a) {
  if (a.n < 1) throw InputError("--n must be at least 1");
  DiscreteTorus t(a.m, a.n);
  Report r;
  r.criterion = "AC1";
  auto s = spectrum_1d(a.n);
  bool symmetric = s[0] == 0.0;
  for (std::int64_t k = 1; k < a.n; ++k) symmetric = symmetric && s[k] == s[a.n - k];
  r.pass = symmetric;
  r.results["points"] = t.points();
  r.results["spectrum_1d"] = s;
  r.results["symmetric"] = symmetric;
  r.x_name = "k";
  if (a.sorted) {
    auto all = sorted_spectrum(t);
    r.results["min_nonzero"] = all.size() > 1 ? all[1] : 0.0;
    r.results["max"] = all.back();
    for (std::size_t i = 0; i < all.size(); ++i) r.series.emplace_back(static_cast<double>(i), all[i]);
  } else {
    for (std::int64_t k = 0; k < a.n; ++k) r.series.emplace_back(static_cast<double>(k), s[k]);
  }
  r.summary = "points=" + std::to_string(t.points());
  return r;
}

Report cmd_logdet(const Args& a) {
  std::vector<std::int64_t> ns;
  if (!a.n_grid.empty()) ns = parse_int_values(a.n_grid, "--n-grid");
  else if (a.n > 0) ns = {a.n};
  else throw InputError("logdet needs --n or --n-grid");
  auto lo = a.common.lattice();
  Report r;
  r.x_name = "n";
  r.criterion = a.via_regint ? "AC6" : (a.rescaled && a.m >= 2 ? "AC13" : "AC1");
  const double tol = tol_or(a.tol, a.via_regint ? 1e-6 : 1e-10);
  json rows = json::array();
  double worst = 0.0;
  for (auto n : ns) {
    DiscreteTorus t(a.m, n);
    json row{{"n", n}};
    double value = a.rescaled ? log_det_rescaled(t, lo) : log_det(t, lo);
    row["value"] = value;
    std::optional<double> ref;
    if (a.via_regint) {
      if (a.rescaled) throw InputError("--via-regint works with the normalized Laplacian only");
      LogDetRegIntOptions o;
      o.zeta_at_zero = static_cast<double>(t.points() - 1);
      auto res = logdet_via_regint([&](double z, int al) { return resolvent_trace(t, z, al, lo); }, a.m, 1, o);
      row["regint"] = res.value;
      row["regint_error_estimate"] = res.error_estimate;
      row["regint_correction"] = res.correction;
      ref = value;
      value = res.value;
    } else if (a.m == 1) {
      double dn = static_cast<double>(n);
      ref = a.rescaled ? 2.0 * std::log(dn) : 2.0 * std::log(dn) + (dn - 1.0) * std::log(dn * dn / (4.0 * kPi * kPi));
    } else if (a.rescaled && t.points() <= 4096) {
      ref = log_mpz(spanning_tree_count(t) * t.points());
    }
    if (ref) {
      row["reference"] = *ref;
      double err = a.via_regint ? std::fabs(value - *ref) : std::fabs(value - *ref) / std::max(std::fabs(*ref), 1e-300);
      row["error"] = err;
      worst = std::max(worst, err);
    }
    rows.push_back(row);
    r.series.emplace_back(static_cast<double>(n), row["value"].get<double>());
  }
  r.results["rows"] = rows;
  r.results["tolerance"] = tol;
  r.results["error_kind"] = a.via_regint ? "absolute" : "relative";
  r.results["max_error"] = worst;
  r.pass = worst <= tol;
  r.summary = "value=" + fmt(rows.back()[a.via_regint ? "regint" : "value"].get<double>()) + " max_error=" + fmt(worst);
  return r;
}

Report cmd_trace(const Args& a) {
  if (a.n < 1) throw InputError("--n must be at least 1");
  DiscreteTorus t(a.m, a.n);
  int alpha = a.alpha == 0 ? a.m : a.alpha;
  std::vector<double> zs = a.z_grid.empty() ? std::vector<double>{a.z} : parse_values(a.z_grid, "--z-grid");
  auto lo = a.common.lattice();
  Report r;
  r.criterion = "AC11";
  r.x_name = "z";
  const double tol = tol_or(a.tol, 1e-10);
  json rows = json::array();
  double worst = 0.0;
  for (double z : zs) {
    require_positive(z, "z");
    double v = resolvent_trace(t, z, alpha, lo);
    json row{{"z", z}, {"value", v}};
    if (a.check_dual) {
      if (alpha != a.m) throw InputError("--check-dual needs alpha = m");
      double d = trace_inclusion_exclusion(t, z, lo);
      row["inclusion_exclusion"] = d;
      worst = std::max(worst, std::fabs(d - v) / std::fabs(v));
    }
    rows.push_back(row);
    r.series.emplace_back(z, v);
  }
  r.results["alpha"] = alpha;
  r.results["rows"] = rows;
  if (a.check_dual) {
    r.results["max_rel_diff"] = worst;
    r.results["tolerance"] = tol;
    r.pass = worst <= tol;
  }
  r.summary = "value=" + fmt(r.series.back().second);
  return r;
}

Report cmd_trees(const Args& a) {
  if (a.n < 2) throw InputError("--n must be at least 2");
  DiscreteTorus t(a.m, a.n);
  auto c = matrix_tree_check(t, a.common.lattice());
  const double tol = tol_or(a.tol, 1e-9);
  Report r;
  r.criterion = "AC13";
  r.results["trees"] = c.trees.get_str();
  r.results["eigen_product"] = c.eigen_product.get_str();
  r.results["integer_match"] = c.integer_match;
  r.results["log_rescaled"] = c.log_rescaled;
  r.results["log_expected"] = c.log_expected;
  r.results["rel_diff"] = c.rel_diff;
  r.results["tolerance"] = tol;
  r.pass = c.pass(tol);
  std::string trees = c.trees.get_str();
  r.summary = "trees=" + (trees.size() > 24 ? trees.substr(0, 12) + "...(" + std::to_string(trees.size()) + " digits)" : trees);
  return r;
}

Report cmd_regint(const Args& a) {
  require_positive(a.window_lo, "window start");
  if (!(a.window_hi > a.window_lo)) throw InputError("window must satisfy start < stop");
  IntegrandHandle h;
  BasisSpec zero, inf;
  double reference = 0.0;
  double scale = 1.0;  // the identity is for scale * integral
  const double lam = a.lambda;
  if (a.integrand == "log-kernel") {
    if (lam < 0.0) throw InputError("--lambda must be non-negative");
    h.f = [lam](double z) { return z / (lam + z * z); };
    if (lam == 0.0) {
      zero = parse_basis("-1:0");
      inf = parse_basis("-1:0");
      reference = 0.0;
    } else {
      zero = parse_basis("1:0,3:0,5:0,7:0");
      inf = parse_basis("-1:0,-3:0,-5:0,-7:0,-9:0");
      reference = std::log(lam);
    }
    scale = -2.0;
  } else if (a.integrand == "lorentz") {
    require_positive(lam, "--lambda");
    h.f = [lam](double z) { return 1.0 / (lam + z * z); };
    zero = parse_basis("0:0,2:0,4:0,6:0");
    inf = parse_basis("-2:0,-4:0,-6:0,-8:0,-10:0");
    reference = kPi / (2.0 * std::sqrt(lam));
  } else {
    throw InputError("unknown integrand '" + a.integrand + "' (log-kernel, lorentz)");
  }
  if (!a.basis_zero.empty()) zero = parse_basis(a.basis_zero);
  if (!a.basis_inf.empty()) inf = parse_basis(a.basis_inf);
  auto res = reg_integral(h, a.window_lo, a.window_hi, zero, inf);
  const double tol = tol_or(a.tol, 1e-8);
  Report r;
  r.criterion = "AC5";
  double value = scale * res.value;
  r.results["integral"] = res.value;
  r.results["core_part"] = res.core_part;
  r.results["tail_zero_part"] = res.tail_zero_part;
  r.results["tail_inf_part"] = res.tail_inf_part;
  r.results["error_estimate"] = res.error_estimate;
  if (res.zero_tail) r.results["zero_tail"] = expansion_to_json(res.zero_tail->expansion);
  if (res.inf_tail) r.results["inf_tail"] = expansion_to_json(res.inf_tail->expansion);
  r.results["scale"] = scale;
  r.results["value"] = value;
  r.results["reference"] = reference;
  r.results["abs_diff"] = std::fabs(value - reference);
  r.results["tolerance"] = tol;
  r.pass = std::fabs(value - reference) <= tol;
  r.summary = "value=" + fmt(value) + " reference=" + fmt(reference);
  return r;
}

Report cmd_interchange(const Args& a) {
  const double tol = tol_or(a.tol, 1e-6);
  std::vector<HomogeneousFn> fns;
  if (a.all) fns = builtin_registry();
  else if (!a.function.empty()) fns = {registry_function(a.function)};
  else throw InputError("interchange-check needs --all or --function");
  Report r;
  r.criterion = "AC8";
  json rows = json::array();
  int passed = 0;
  for (const auto& f : fns) {
    auto rep = check_interchange(f, tol);
    rows.push_back({{"name", rep.name},
                    {"degree", rep.degree},
                    {"lhs", rep.lhs},
                    {"lhs_uncertainty", rep.lhs_uncertainty},
                    {"rhs", rep.rhs},
                    {"corr", rep.corr},
                    {"abs_diff", rep.abs_diff},
                    {"homogeneity_error", rep.homogeneity_error},
                    {"pass", rep.pass}});
    passed += rep.pass;
  }
  r.results["functions"] = rows;
  r.results["tolerance"] = tol;
  r.pass = passed == static_cast<int>(fns.size());
  r.summary = "passed=" + std::to_string(passed) + "/" + std::to_string(fns.size());
  return r;
}

Report cmd_em(const Args& a) {
  const std::string mode = a.mode.empty() ? (a.pattern.empty() ? "decompose" : "pattern") : a.mode;
  const int M = a.M == 0 ? default_em_order(a.m) : a.M;
  int alpha = a.alpha == 0 ? a.m : a.alpha;
  Report r;
  r.criterion = "AC9";
  r.results["mode"] = mode;
  r.results["M"] = M;
  if (mode == "decompose") {
    if (a.n < 1) throw InputError("--n must be at least 1");
    require_positive(a.z, "z");
    const double tol = tol_or(a.tol, 1e-8);
    auto d = em_decompose_md(DiscreteTorus(a.m, a.n), a.z, alpha, M);
    json pats = json::array();
    bool twos_zero = true;
    for (const auto& [b, v] : d.patterns) {
      pats.push_back({{"beta", b}, {"value", v}});
      if (std::find(b.begin(), b.end(), 2) != b.end()) twos_zero = twos_zero && v == 0.0;
    }
    r.results["patterns"] = pats;
    r.results["total"] = d.total;
    r.results["direct"] = d.direct;
    r.results["abs_diff"] = std::fabs(d.total - d.direct);
    r.results["patterns_with_2_zero"] = twos_zero;
    r.results["tolerance"] = tol;
    r.pass = std::fabs(d.total - d.direct) <= tol && twos_zero;
    r.summary = "total=" + fmt(d.total) + " direct=" + fmt(d.direct);
  } else if (mode == "pattern") {
    if (a.pattern.empty()) throw InputError("--pattern is required in pattern mode");
    if (a.n < 1) throw InputError("--n must be at least 1");
    require_positive(a.z, "z");
    double v = em_pattern_value(static_cast<int>(a.pattern.size()), static_cast<double>(a.n), a.z, alpha, a.pattern, M);
    bool has2 = std::find(a.pattern.begin(), a.pattern.end(), 2) != a.pattern.end();
    r.results["beta"] = a.pattern;
    r.results["value"] = v;
    r.pass = !has2 || v == 0.0;
    r.summary = "value=" + fmt(v);
  } else if (mode == "poly") {
    if (a.n < 1) throw InputError("--n must be at least 1");
    const double tol = tol_or(a.tol, 1e-12);
    json rows = json::array();
    bool ok = true;
    for (int deg = 0; deg <= 2 * M; ++deg) {
      DerivativeOracle u = [deg](int order, double x) {
        if (order > deg) return 0.0;
        double c = 1.0;
        for (int i = 0; i < order; ++i) c *= deg - i;
        return c * std::pow(x, deg - order);
      };
      auto parts = em_sum_1d(u, a.n, M);
      long double exact = 0.0L;
      for (std::int64_t x = 0; x <= a.n; ++x) exact += std::pow(static_cast<long double>(x), deg);
      double rel = std::fabs(parts.total() - static_cast<double>(exact)) / static_cast<double>(exact);
      bool row_ok = parts.remainder == 0.0 && rel <= tol;
      ok = ok && row_ok;
      rows.push_back({{"degree", deg}, {"total", parts.total()}, {"exact", static_cast<double>(exact)},
                      {"remainder", parts.remainder}, {"rel_error", rel}, {"pass", row_ok}});
    }
    r.results["rows"] = rows;
    r.results["tolerance"] = tol;
    r.pass = ok;
    r.summary = "degrees=0.." + std::to_string(2 * M);
  } else if (mode == "cancellation") {
    r.criterion = "AC10";
    const double tol = tol_or(a.tol, 1e-14);
    auto zs = parse_values(a.z_grid.empty() ? "0.5,1,2,4" : a.z_grid, "--z-grid");
    auto c = h_minus_2m_cancellation(a.m, zs);
    double worst = *std::max_element(c.relative_residual.begin(), c.relative_residual.end());
    r.results["binomial_sum"] = c.binomial_sum;
    r.results["z"] = c.z_values;
    r.results["residual"] = c.residual;
    r.results["relative_residual"] = c.relative_residual;
    r.results["tolerance"] = tol;
    r.pass = worst <= tol;
    r.summary = "max_scaled_residual=" + fmt(worst);
  } else if (mode == "remainder") {
    r.criterion = "AC10";
    auto zs = parse_values(a.z_grid.empty() ? "4:16:x2" : a.z_grid, "--z-grid");
    auto ns = parse_int_values(a.n_grid.empty() ? "8:128:x2" : a.n_grid, "--n-grid");
    auto rep = remainder_uniformity_check(a.m, M, zs, ns);
    r.results["z"] = rep.z_values;
    r.results["n"] = rep.n_values;
    r.results["remainder"] = rep.remainder;
    r.results["noise_floor"] = rep.noise_floor;
    r.results["scaled_sup"] = rep.scaled_sup;
    r.results["uniformity_ratio"] = rep.uniformity_ratio;
    r.results["max_pattern_mismatch"] = rep.max_pattern_mismatch;
    r.results["uniform"] = rep.uniform;
    r.results["decaying"] = rep.decaying;
    r.pass = rep.uniform && rep.decaying;
    r.summary = "uniform=" + std::string(rep.uniform ? "1" : "0") + " decaying=" + (rep.decaying ? "1" : "0");
  } else if (mode == "sine") {
    r.criterion = "AC10";
    auto ns = parse_values(a.n_grid.empty() ? "8:128:x2" : a.n_grid, "--n-grid");
    auto xf = parse_list(a.x_fractions, "--x-fractions");
    auto rep = sine_factor_bound_check(a.k, a.l, ns, xf, alpha);
    r.results["k"] = rep.k;
    r.results["l"] = rep.l;
    r.results["n_branch"] = rep.n_branch;
    r.results["n"] = rep.n_values;
    r.results["max_ratio"] = rep.max_ratio;
    r.results["constant"] = rep.constant;
    r.results["bounded"] = rep.bounded;
    r.pass = rep.bounded;
    r.summary = "constant=" + fmt(rep.constant);
  } else {
    throw InputError("unknown em-check mode '" + mode + "'");
  }
  return r;
}

Report cmd_zeta_det(const Args& a) {
  Report r;
  r.criterion = "AC7";
  double direct = log_det_zeta(a.m);
  double closed = zeta_det_closed_form(a.m);
  r.results["log_det_zeta"] = direct;
  r.results["zeta_at_zero"] = spectral_zeta(a.m, 0.0);
  if (!std::isnan(closed)) r.results["closed_form"] = closed;
  if (a.via_regint) {
    const double tol = tol_or(a.tol, a.m == 1 ? 1e-4 : 5e-3);
    auto res = logdet_zeta_via_regint(a.m);
    double ref = std::isnan(closed) ? direct : closed;
    r.results["regint"] = res.value;
    r.results["regint_correction"] = res.correction;
    r.results["regint_error_estimate"] = res.error_estimate;
    r.results["reference"] = ref;
    r.results["abs_diff"] = std::fabs(res.value - ref);
    r.results["tolerance"] = tol;
    r.pass = std::fabs(res.value - ref) <= tol;
    r.summary = "regint=" + fmt(res.value) + " reference=" + fmt(ref);
  } else {
    const double tol = tol_or(a.tol, 1e-8);
    if (!std::isnan(closed)) {
      r.results["abs_diff"] = std::fabs(direct - closed);
      r.results["tolerance"] = tol;
      r.pass = std::fabs(direct - closed) <= tol;
    }
    r.summary = "log_det_zeta=" + fmt(direct);
  }
  return r;
}

Report cmd_trace_continuum(const Args& a) {
  int alpha = a.alpha == 0 ? a.m : a.alpha;
  std::vector<double> zs = a.z_grid.empty() ? std::vector<double>{a.z} : parse_values(a.z_grid, "--z-grid");
  Report r;
  r.criterion = "AC11";
  r.x_name = "z";
  const double tol = tol_or(a.tol, 1e-12);
  json rows = json::array();
  double worst = 0.0;
  bool has_ref = a.m == 1 && alpha == 1;
  for (double z : zs) {
    require_positive(z, "z");
    double v = resolvent_trace_continuum(a.m, z, alpha);
    json row{{"z", z}, {"value", v}};
    if (has_ref) {
      double ref = kPi / (z * std::tanh(kPi * z));
      row["reference"] = ref;
      worst = std::max(worst, std::fabs(v - ref) / ref);
    }
    rows.push_back(row);
    r.series.emplace_back(z, v);
  }
  r.results["alpha"] = alpha;
  r.results["rows"] = rows;
  if (has_ref) {
    r.results["max_rel_error"] = worst;
    r.results["tolerance"] = tol;
    r.pass = worst <= tol;
  }
  r.summary = "value=" + fmt(r.series.back().second);
  return r;
}

Report cmd_converge(const Args& a) {
  int alpha = a.alpha == 0 ? a.m : a.alpha;
  auto ns = parse_int_values(a.n_grid.empty() ? "8:1024:x2" : a.n_grid, "--n-grid");
  require_positive(a.final_tol, "--final-tol");
  require_positive(a.deriv_tol, "--deriv-tol");
  auto rep = convergence_check(a.m, ns, a.z, alpha, a.final_tol, a.deriv_tol, a.common.lattice());
  Report r;
  r.criterion = "AC11";
  r.x_name = "n";
  r.y_name = "diff";
  r.results["alpha"] = alpha;
  r.results["continuum"] = rep.continuum;
  r.results["n"] = rep.n;
  r.results["discrete"] = rep.discrete;
  r.results["diff"] = rep.diff;
  r.results["strictly_decreasing"] = rep.strictly_decreasing;
  r.results["final_abs_diff"] = rep.final_abs_diff;
  r.results["final_tol"] = rep.final_tol;
  r.results["final_below"] = rep.final_below;
  r.results["max_derivative_rel_error"] = rep.max_derivative_rel_error;
  r.results["derivative_tol"] = rep.derivative_tol;
  r.results["derivative_ok"] = rep.derivative_ok;
  r.pass = rep.pass();
  for (std::size_t i = 0; i < rep.n.size(); ++i) r.series.emplace_back(static_cast<double>(rep.n[i]), rep.diff[i]);
  r.summary = "final_abs_diff=" + fmt(rep.final_abs_diff);
  return r;
}

Report cmd_eigenproduct(const Args& a) {
  ProductMode mode;
  if (a.mode.empty() || a.mode == "cutoff") mode = ProductMode::ByCutoff;
  else if (a.mode == "count") mode = ProductMode::ByCount;
  else throw InputError("--mode must be cutoff or count");
  bool smoothing = mode == ProductMode::ByCutoff && a.m >= 2;
  if (a.smooth) smoothing = true;
  if (a.no_smooth) smoothing = false;
  std::string grid = a.grid, basis = a.basis;
  if (grid.empty()) grid = a.m == 1 ? "16:4096:x2" : "16:256:x1.41421356237";
  if (basis.empty()) basis = a.m == 1 ? "1:1,1:0,0:1,0:0,-1:0,-3:0" : "2:1,2:0,0:0";
  auto g = parse_values(grid, "--grid");
  auto res = eigenproduct_reglimit(a.m, mode, g, parse_basis(basis), smoothing);
  Report r;
  r.criterion = "AC12";
  r.x_name = mode == ProductMode::ByCount ? "N" : "Lambda";
  double ref = res.reference;
  if (mode == ProductMode::ByCount) ref = a.m == 1 ? 2.0 * std::log(kPi) : std::nan("");
  const double tol = tol_or(a.tol, a.m == 1 ? 1e-6 : 5e-2);
  r.results["mode"] = mode == ProductMode::ByCount ? "count" : "cutoff";
  r.results["smoothing"] = smoothing;
  r.results["basis"] = basis;
  r.results["constant"] = res.constant;
  r.results["uncertainty"] = res.uncertainty;
  r.results["log_det_zeta"] = res.reference;
  r.results["fit"] = fit_summary(res.fit);
  if (!std::isnan(ref)) {
    r.results["reference"] = ref;
    r.results["abs_diff"] = std::fabs(res.constant - ref);
    r.results["tolerance"] = tol;
    r.pass = std::fabs(res.constant - ref) <= tol;
  }
  for (std::size_t i = 0; i < res.parameters.size(); ++i) r.series.emplace_back(res.parameters[i], res.values[i]);
  r.summary = "constant=" + fmt(res.constant) + (std::isnan(ref) ? "" : " reference=" + fmt(ref));
  return r;
}

Report cmd_main_theorem(const Args& a) {
  Report r;
  r.x_name = "n";
  if (a.cjk) {
    auto ns = parse_int_values(a.n_grid.empty() ? "16:512:x1.41421356237" : a.n_grid, "--n-grid");
    auto res = cjk_coefficient_fit(ns, a.basis.empty() ? BasisSpec{} : parse_basis(a.basis), a.common.lattice());
    const double tol = tol_or(a.tol, 1e-4);
    r.criterion = "AC4";
    r.results["coefficient"] = res.coefficient;
    r.results["uncertainty"] = res.uncertainty;
    r.results["reference"] = res.reference;
    r.results["closed_form"] = res.closed_form;
    r.results["abs_diff"] = std::fabs(res.coefficient - res.reference);
    r.results["tolerance"] = tol;
    r.results["fit"] = fit_summary(res.fit);
    r.pass = std::fabs(res.coefficient - res.reference) <= tol;
    for (std::size_t i = 0; i < res.n_values.size(); ++i)
      r.series.emplace_back(static_cast<double>(res.n_values[i]), res.values[i]);
    r.summary = "coefficient=" + fmt(res.coefficient) + " reference=" + fmt(res.reference);
    for (std::size_t i = 0; i < res.n_values.size(); ++i)
      r.residuals.emplace_back(static_cast<double>(res.n_values[i]), res.fit.residuals[i]);
    return r;
  }
  std::string grid = a.n_grid, basis = a.basis;
  if (grid.empty()) grid = a.m == 1 ? "16:4096:x2" : "64:1024:x1.25";
  if (basis.empty()) basis = a.m == 1 ? "1:1,1:0,0:1,0:0" : "2:1,2:0,1:1,1:0,0:1,0:0,-1:0,-2:0";
  auto ns = parse_int_values(grid, "--n-grid");
  auto res = main_theorem_pipeline(a.m, ns, parse_basis(basis), a.rescaled, a.common.lattice());
  const double tol = tol_or(a.tol, a.m == 1 ? 1e-6 : 1e-2);
  r.criterion = a.m == 1 ? "AC2" : "AC3";
  r.results["basis"] = basis;
  r.results["rescaled"] = a.rescaled;
  r.results["constant"] = res.constant;
  r.results["uncertainty"] = res.uncertainty;
  r.results["reference"] = res.reference;
  r.results["abs_diff"] = std::fabs(res.constant - res.reference);
  r.results["tolerance"] = tol;
  r.results["fit"] = fit_summary(res.fit);
  r.pass = res.pass(tol);
  for (std::size_t i = 0; i < res.n_values.size(); ++i)
    r.series.emplace_back(static_cast<double>(res.n_values[i]), res.values[i]);
  r.summary = "constant=" + fmt(res.constant) + " reference=" + fmt(res.reference);
  for (std::size_t i = 0; i < res.n_values.size(); ++i)
    r.residuals.emplace_back(static_cast<double>(res.n_values[i]), res.fit.residuals[i]);
  return r;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Reads "key = value" lines. Blank lines, '#' comments and [section] headers are skipped;
// values may be quoted.
std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw InputError(path + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(key, value);
  }
  return kv;
}

// Splices config entries into argv right after the subcommand name, skipping keys
// given on the command line so flags take precedence.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> merged(args.begin(), args.begin() + 2);
  for (const auto& [key, value] : read_flat_config(path)) {
    if (key == "config" || given(key)) continue;
    if (value == "true") merged.push_back("--" + key);
    else if (value != "false") {
      merged.push_back("--" + key);
      merged.push_back(value);
    }
  }
  merged.insert(merged.end(), args.begin() + 2, args.end());
  return merged;
}

// Inputs echo: every option of the subcommand with its effective value.
json echo_inputs(const CLI::App* sub) {
  json in = json::object();
  for (const CLI::Option* o : sub->get_options()) {
    std::string name = o->get_single_name();
    if (name == "help" || name == "json" || name == "csv" || name == "config") continue;
    if (o->get_expected_min() == 0) {
      in[name] = o->count() > 0;
      continue;
    }
    if (o->count() > 0) {
      std::string v;
      for (const auto& s : o->results()) v += (v.empty() ? "" : ",") + s;
      in[name] = v;
    } else {
      in[name] = o->get_default_str();
    }
  }
  return in;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularized determinants on discrete and flat tori"};
  app.require_subcommand(1, 1);
  Args a;

  struct Entry {
    CLI::App* sub;
    std::function<Report(const Args&)> run;
  };
  std::vector<Entry> entries;
  auto add = [&](const std::string& name, const std::string& desc, std::function<Report(const Args&)> run) {
    CLI::App* s = app.add_subcommand(name, desc);
    add_common(s, a.common);
    entries.push_back({s, std::move(run)});
    return s;
  };
  auto dim = [&](CLI::App* s) {
    s->add_option("--m", a.m, "torus dimension")->check(CLI::Range(1, 8))->capture_default_str();
  };

  auto* s = add("spectrum", "eigenvalues of the discrete torus Laplacian", cmd_spectrum);
  dim(s);
  s->add_option("--n", a.n, "side length")->required();
  s->add_flag("--sorted", a.sorted, "emit the full sorted spectrum");

  s = add("logdet", "log det of the discrete torus Laplacian", cmd_logdet);
  dim(s);
  s->add_option("--n", a.n, "side length");
  s->add_option("--n-grid", a.n_grid, "start:stop:xRatio or a list");
  s->add_flag("--rescaled", a.rescaled, "graph Laplacian normalization");
  s->add_flag("--via-regint", a.via_regint, "also compute it as a finite-part integral of the resolvent trace");
  s->add_option("--tol", a.tol, "tolerance against the reference");

  s = add("trace", "resolvent trace of the discrete torus", cmd_trace);
  dim(s);
  s->add_option("--n", a.n, "side length")->required();
  s->add_option("--z", a.z, "spectral parameter")->capture_default_str();
  s->add_option("--z-grid", a.z_grid, "start:stop:xRatio or a list");
  s->add_option("--alpha", a.alpha, "power (default m)");
  s->add_flag("--check-dual", a.check_dual, "compare with the inclusion-exclusion sum");
  s->add_option("--tol", a.tol, "relative tolerance for --check-dual");

  s = add("trees", "spanning trees against the eigenvalue product", cmd_trees);
  dim(s);
  s->add_option("--n", a.n, "side length")->required();
  s->add_option("--tol", a.tol, "relative tolerance of the double-precision log det");

  s = add("regint", "finite-part integral of a built-in integrand", cmd_regint);
  s->add_option("--integrand", a.integrand, "log-kernel: z/(lambda+z^2), lorentz: 1/(lambda+z^2)")
      ->capture_default_str();
  s->add_option("--lambda", a.lambda, "integrand parameter")->capture_default_str();
  s->add_option("--window-start", a.window_lo, "quadrature window start")->capture_default_str();
  s->add_option("--window-stop", a.window_hi, "quadrature window stop")->capture_default_str();
  s->add_option("--basis-zero", a.basis_zero, "tail basis at zero, alpha:k list");
  s->add_option("--basis-inf", a.basis_inf, "tail basis at infinity, alpha:k list");
  s->add_option("--tol", a.tol, "absolute tolerance");

  s = add("interchange-check", "regularized limit versus finite-part integral", cmd_interchange);
  s->add_flag("--all", a.all, "every registry function");
  s->add_option("--function", a.function, "one registry function by name");
  s->add_option("--tol", a.tol, "absolute tolerance");

  s = add("em-check", "Euler-Maclaurin decomposition checks", cmd_em);
  dim(s);
  s->add_option("--mode", a.mode, "decompose, pattern, poly, cancellation, remainder or sine")
      ->check(CLI::IsMember({"decompose", "pattern", "poly", "cancellation", "remainder", "sine"}));
  s->add_option("--n", a.n, "side length");
  s->add_option("--z", a.z, "spectral parameter")->capture_default_str();
  s->add_option("--alpha", a.alpha, "power (default m)");
  s->add_option("--M", a.M, "truncation order (default ceil((3m+1)/2))");
  s->add_option("--pattern", a.pattern, "operator indices, e.g. 3,1")->delimiter(',');
  s->add_option("--z-grid", a.z_grid, "z values");
  s->add_option("--n-grid", a.n_grid, "n values");
  s->add_option("--k", a.k, "derivative order for sine mode")->capture_default_str();
  s->add_option("--l", a.l, "index for sine mode")->capture_default_str();
  s->add_option("--x-fractions", a.x_fractions, "x/n sample points for sine mode")->capture_default_str();
  s->add_option("--tol", a.tol, "tolerance");

  s = add("zeta-det", "zeta-regularized determinant of the flat torus", cmd_zeta_det);
  dim(s);
  s->add_flag("--via-regint", a.via_regint, "compute it from the resolvent trace");
  s->add_option("--tol", a.tol, "absolute tolerance");

  s = add("trace-continuum", "resolvent trace of the flat torus", cmd_trace_continuum);
  dim(s);
  s->add_option("--z", a.z, "spectral parameter")->capture_default_str();
  s->add_option("--z-grid", a.z_grid, "start:stop:xRatio or a list");
  s->add_option("--alpha", a.alpha, "power (default m)");
  s->add_option("--tol", a.tol, "relative tolerance against the m = 1 closed form");

  s = add("converge", "discrete to continuum resolvent trace convergence", cmd_converge);
  dim(s);
  s->add_option("--z", a.z, "spectral parameter")->capture_default_str();
  s->add_option("--alpha", a.alpha, "power (default m)");
  s->add_option("--n-grid", a.n_grid, "start:stop:xRatio (default 8:1024:x2)");
  s->add_option("--final-tol", a.final_tol, "bound on the gap at the last n")->capture_default_str();
  s->add_option("--deriv-tol", a.deriv_tol, "bound on the derivative identity error")->capture_default_str();

  s = add("eigenproduct", "regularized partial products of flat torus eigenvalues", cmd_eigenproduct);
  dim(s);
  s->add_option("--mode", a.mode, "cutoff or count")->check(CLI::IsMember({"cutoff", "count"}));
  s->add_option("--grid", a.grid, "Lambda or N grid, start:stop:xRatio");
  s->add_option("--basis", a.basis, "alpha:k list");
  s->add_flag("--smooth", a.smooth, "force the smooth cutoff");
  s->add_flag("--no-smooth", a.no_smooth, "force the sharp cutoff");
  s->add_option("--tol", a.tol, "absolute tolerance");

  s = add("main-theorem", "regularized limit of discrete log det", cmd_main_theorem);
  dim(s);
  s->add_option("--n-grid", a.n_grid, "start:stop:xRatio");
  s->add_option("--basis", a.basis, "alpha:k list");
  s->add_flag("--rescaled", a.rescaled, "graph Laplacian normalization");
  s->add_flag("--cjk", a.cjk, "fit the n^2 coefficient of the graph Laplacian log det on the 2-torus");
  s->add_option("--residuals-csv", a.residuals_csv, "write fit residuals per n here");
  s->add_option("--tol", a.tol, "absolute tolerance");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = merge_config(args);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  const Entry* chosen = nullptr;
  for (const auto& e : entries)
    if (e.sub->parsed()) chosen = &e;
  const std::string name = chosen->sub->get_name();

  try {
    json inputs = echo_inputs(chosen->sub);
    const std::string config_hash = hex64(fnv1a64(name + "\n" + inputs.dump()));
    auto t0 = std::chrono::steady_clock::now();
    Report rep = chosen->run(a);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json doc{{"subcommand", name},
             {"criterion", rep.criterion},
             {"config_hash", config_hash},
             {"inputs", inputs},
             {"results", rep.results},
             {"pass", rep.pass},
             {"timing_s", secs}};
    if (!a.common.json_path.empty()) write_json(a.common.json_path, doc);
    if (!a.common.csv_path.empty()) {
      if (rep.series.empty()) throw InputError(name + " has no series to write");
      write_csv(a.common.csv_path, rep.x_name, rep.y_name, rep.series, config_hash);
    }
    if (!a.residuals_csv.empty()) {
      if (rep.residuals.empty()) throw InputError(name + " has no fit residuals to write");
      write_csv(a.residuals_csv, rep.x_name, "residual", rep.residuals, config_hash);
    }
    out << name << " [" << rep.criterion << "] " << (rep.pass ? "PASS" : "FAIL") << " " << rep.summary << "\n";
    return rep.pass ? kOk : kAcceptanceFail;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const json::exception& e) {
    err << "report error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace regdet::cli
