#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "regdet/discrete_torus.hpp"
#include "regdet/errors.hpp"
#include "regdet/euler_maclaurin.hpp"
#include "regdet/expansion.hpp"
#include "regdet/interchange.hpp"
#include "regdet/pipelines.hpp"
#include "regdet/regint.hpp"
#include "regdet/smooth_torus.hpp"
#include "regdet/spanning_trees.hpp"

namespace py = pybind11;
using namespace regdet;

namespace {

py::int_ to_py_int(const mpz_class& v) { return py::int_(py::str(v.get_str())); }

py::dict coefficients_dict(const FitReport& f) {
  py::dict d;
  for (const auto& [pair, c] : f.coefficients) d[py::make_tuple(pair.alpha, pair.k)] = c;
  return d;
}

py::dict fit_dict(const FitReport& f) {
  py::dict d;
  d["coefficients"] = coefficients_dict(f);
  d["rms_residual"] = f.rms_residual;
  d["condition_estimate"] = f.condition_estimate;
  d["stability_delta"] = f.stability_delta;
  d["residuals"] = f.residuals;
  return d;
}

Samples make_samples(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("x and y must have the same length");
  Samples s;
  for (std::size_t i = 0; i < x.size(); ++i) s.push_back(x[i], y[i]);
  return s;
}

LatticeOptions lattice(unsigned threads) {
  LatticeOptions o;
  o.threads = threads;
  return o;
}

ProductMode product_mode(const std::string& mode) {
  if (mode == "cutoff") return ProductMode::ByCutoff;
  if (mode == "count") return ProductMode::ByCount;
  throw InputError("mode must be 'cutoff' or 'count'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Regularized determinants of discrete and flat tori";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<FitDegenerateError>(m, "FitDegenerateError", base.ptr());
  py::register_exception<TailModelError>(m, "TailModelError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<DiscreteTorus>(m, "DiscreteTorus")
      .def(py::init<int, std::int64_t>(), py::arg("m"), py::arg("n"))
      .def_property_readonly("m", &DiscreteTorus::m)
      .def_property_readonly("n", &DiscreteTorus::n)
      .def_property_readonly("points", &DiscreteTorus::points)
      .def("__repr__", [](const DiscreteTorus& t) {
        return "DiscreteTorus(m=" + std::to_string(t.m()) + ", n=" + std::to_string(t.n()) + ")";
      });

  m.def("spectrum_1d", &spectrum_1d, py::arg("n"));
  m.def("log_det", [](const DiscreteTorus& t, unsigned threads) { return log_det(t, lattice(threads)); },
        py::arg("torus"), py::arg("threads") = 0);
  m.def("log_det_rescaled",
        [](const DiscreteTorus& t, unsigned threads) { return log_det_rescaled(t, lattice(threads)); },
        py::arg("torus"), py::arg("threads") = 0);
  m.def("resolvent_trace",
        [](const DiscreteTorus& t, double z, int alpha, unsigned threads) {
          return resolvent_trace(t, z, alpha, lattice(threads));
        },
        py::arg("torus"), py::arg("z"), py::arg("alpha"), py::arg("threads") = 0);
  m.def("spanning_tree_count", [](const DiscreteTorus& t) { return to_py_int(spanning_tree_count(t)); },
        py::arg("torus"));
  m.def("matrix_tree_check", [](const DiscreteTorus& t) {
    auto c = matrix_tree_check(t);
    py::dict d;
    d["trees"] = to_py_int(c.trees);
    d["eigen_product"] = to_py_int(c.eigen_product);
    d["integer_match"] = c.integer_match;
    d["rel_diff"] = c.rel_diff;
    d["pass"] = c.pass();
    return d;
  }, py::arg("torus"));

  m.def("fit_expansion",
        [](const std::vector<double>& x, const std::vector<double>& y, const std::string& basis) {
          return fit_dict(fit_expansion(make_samples(x, y), parse_basis(basis)));
        },
        py::arg("x"), py::arg("y"), py::arg("basis"));
  m.def("extract_reglimit",
        [](const std::vector<double>& x, const std::vector<double>& y, const std::string& basis) {
          auto r = extract_reglimit(make_samples(x, y), parse_basis(basis));
          return py::make_tuple(r.value, r.uncertainty);
        },
        py::arg("x"), py::arg("y"), py::arg("basis"));

  m.def("reg_integral",
        [](const std::function<double(double)>& f, double a, double A, const std::string& zero_basis,
           const std::string& inf_basis) {
          IntegrandHandle h{f, std::nullopt, std::nullopt};
          TailRule zero = zero_basis.empty() ? TailRule{ProperLimit{}} : TailRule{parse_basis(zero_basis)};
          TailRule inf = inf_basis.empty() ? TailRule{ProperLimit{}} : TailRule{parse_basis(inf_basis)};
          return reg_integral(h, a, A, zero, inf).value;
        },
        py::arg("f"), py::arg("a"), py::arg("A"), py::arg("zero_basis") = "", py::arg("inf_basis") = "",
        "Finite-part integral of f over (0, inf) with quadrature on [a, A] and fitted tails. "
        "An empty basis makes that window edge a proper limit.");

  m.def("theta_function", &theta_function, py::arg("m"), py::arg("t"));
  m.def("resolvent_trace_continuum", &resolvent_trace_continuum, py::arg("m"), py::arg("z"), py::arg("alpha"));
  m.def("spectral_zeta", &spectral_zeta, py::arg("m"), py::arg("s"));
  m.def("log_det_zeta", &log_det_zeta, py::arg("m"));
  m.def("logdet_zeta_via_regint", [](int mm) { return logdet_zeta_via_regint(mm).value; }, py::arg("m"));

  m.def("main_theorem",
        [](int mm, const std::vector<std::int64_t>& n_grid, const std::string& basis, bool rescaled) {
          auto r = main_theorem_pipeline(mm, n_grid, parse_basis(basis), rescaled);
          py::dict d;
          d["constant"] = r.constant;
          d["uncertainty"] = r.uncertainty;
          d["reference"] = r.reference;
          d["n"] = r.n_values;
          d["values"] = r.values;
          d["fit"] = fit_dict(r.fit);
          return d;
        },
        py::arg("m"), py::arg("n_grid"), py::arg("basis"), py::arg("rescaled") = false);
  m.def("integer_geometric_grid", &integer_geometric_grid, py::arg("start"), py::arg("stop"), py::arg("ratio"));
  m.def("cjk_coefficient",
        [](const std::vector<std::int64_t>& n_grid) {
          auto r = cjk_coefficient_fit(n_grid);
          py::dict d;
          d["coefficient"] = r.coefficient;
          d["uncertainty"] = r.uncertainty;
          d["reference"] = r.reference;
          d["closed_form"] = r.closed_form;
          return d;
        },
        py::arg("n_grid"));
  m.def("eigenproduct_reglimit",
        [](int mm, const std::string& mode, const std::vector<double>& grid, const std::string& basis, bool smoothing) {
          auto r = eigenproduct_reglimit(mm, product_mode(mode), grid, parse_basis(basis), smoothing);
          return py::make_tuple(r.constant, r.uncertainty);
        },
        py::arg("m"), py::arg("mode"), py::arg("grid"), py::arg("basis"), py::arg("smoothing") = false);

  m.def("interchange_registry", [] {
    std::vector<std::string> names;
    for (const auto& f : builtin_registry()) names.push_back(f.name);
    return names;
  });
  m.def("check_interchange",
        [](const std::string& name, double tol) {
          auto r = check_interchange(registry_function(name), tol);
          py::dict d;
          d["degree"] = r.degree;
          d["lhs"] = r.lhs;
          d["rhs"] = r.rhs;
          d["corr"] = r.corr;
          d["abs_diff"] = r.abs_diff;
          d["pass"] = r.pass;
          return d;
        },
        py::arg("name"), py::arg("tol") = 1e-6);

  m.def("em_decompose",
        [](int mm, std::int64_t n, double z, int alpha, int M) {
          auto r = em_decompose_md(DiscreteTorus(mm, n), z, alpha, M == 0 ? default_em_order(mm) : M);
          py::dict patterns;
          for (const auto& [beta, v] : r.patterns) patterns[py::tuple(py::cast(beta))] = v;
          py::dict d;
          d["total"] = r.total;
          d["direct"] = r.direct;
          d["patterns"] = patterns;
          return d;
        },
        py::arg("m"), py::arg("n"), py::arg("z"), py::arg("alpha"), py::arg("M") = 0);
}
