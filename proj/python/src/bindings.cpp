// Python bindings: cube oracle and benchmark, pencil solver, Dini and D_{3/2} tools, run configs.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cavity/config.hpp"
#include "cavity/error.hpp"
#include "cavity/gaffney.hpp"
#include "cavity/harness.hpp"

namespace py = pybind11;
using namespace cavity;

namespace {

SparseSymOp from_dense(const MatX& a) {
  if (a.rows() != a.cols()) fail(Errc::range_error, "matrix must be square");
  std::vector<Triplet> t;
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) t.emplace_back(i, j, a(i, j));
  return SparseSymOp::from_triplets(static_cast<int>(a.rows()), t);
}

std::vector<std::string> tag_names(const std::vector<ModeTag>& tags) {
  std::vector<std::string> out;
  for (ModeTag t : tags) out.emplace_back(to_string(t));
  return out;
}

py::dict dini_dict(const DiniResult& r) {
  py::dict d;
  d["value"] = r.value;
  d["divergent"] = r.divergent;
  d["tail_estimate"] = r.tail_estimate;
  d["blocks"] = std::vector<double>(r.blocks.begin(), r.blocks.end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Maxwell cavity eigenvalue stability toolkit";

  py::register_exception<Error>(m, "CavityError", PyExc_RuntimeError);
  // Prefix the message with the error code name.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      std::ostringstream os;
      os << to_string(e.code()) << ": " << e.what();
      const py::object type = py::module_::import("cavity._core").attr("CavityError");
      PyErr_SetString(type.ptr(), os.str().c_str());
    }
  });
  m.def("exit_code_of", [](const std::string& code) {
    for (int e = 0; e <= static_cast<int>(Errc::io_failure); ++e)
      if (to_string(static_cast<Errc>(e)) == code) return exit_code(kind_of(static_cast<Errc>(e)));
    throw py::value_error("unknown error code " + code);
  }, py::arg("code"), "Process exit code of an error code name such as 'range-error'.");

  // Cube oracle and benchmark
  py::class_<CubeEigenvalue>(m, "CubeEigenvalue")
      .def_readonly("value", &CubeEigenvalue::lambda)
      .def_readonly("multiplicity", &CubeEigenvalue::multiplicity)
      .def_property_readonly("tag", [](const CubeEigenvalue& e) { return std::string(to_string(e.tag)); });
  m.def("analytic_cube_spectrum", &analytic_cube_spectrum, py::arg("tau") = 1.0, py::arg("side") = 3.141592653589793,
        py::arg("m") = 40);

  py::class_<CubeClusterRow>(m, "CubeClusterRow")
      .def_property_readonly("exact", [](const CubeClusterRow& r) { return r.exact.value; })
      .def_property_readonly("maxwell", [](const CubeClusterRow& r) { return r.exact.maxwell; })
      .def_property_readonly("gradient", [](const CubeClusterRow& r) { return r.exact.gradient; })
      .def_readonly("computed", &CubeClusterRow::computed)
      .def_readonly("rel_error", &CubeClusterRow::rel_error)
      .def_readonly("computed_maxwell", &CubeClusterRow::computed_maxwell)
      .def_readonly("computed_gradient", &CubeClusterRow::computed_gradient)
      .def_readonly("multiplicity_ok", &CubeClusterRow::multiplicity_ok)
      .def_readonly("tags_ok", &CubeClusterRow::tags_ok);
  py::class_<CubeBenchmark>(m, "CubeBenchmark")
      .def_readonly("tau", &CubeBenchmark::tau)
      .def_readonly("dofs", &CubeBenchmark::dofs)
      .def_readonly("rows", &CubeBenchmark::rows)
      .def_readonly("seconds", &CubeBenchmark::seconds)
      .def_property_readonly("eigenvalues", [](const CubeBenchmark& b) { return b.spectrum.eigenvalues; })
      .def_property_readonly("tags", [](const CubeBenchmark& b) { return tag_names(b.spectrum.tags); })
      .def("passes", &CubeBenchmark::pass, py::arg("clusters"), py::arg("rel_tol"));
  m.def(
      "cube_benchmark",
      [](double tau, int n_mesh, int order, int m_count, double window) {
        return cube_benchmark(tau, n_mesh, order, m_count, window);
      },
      py::arg("tau") = 1.0, py::arg("n_mesh") = 8, py::arg("order") = 2, py::arg("m") = 40, py::arg("window") = 0.02,
      py::call_guard<py::gil_scoped_release>());

  // Generalized symmetric eigenproblem
  m.def(
      "solve_pencil",
      [](const MatX& a, const MatX& b, int count, double shift, double tol) {
        EigenOptions o;
        o.count = count;
        o.shift = shift;
        o.tol = tol;
        const Spectrum s = solve_gevp(from_dense(a), from_dense(b), o);
        return py::make_tuple(s.eigenvalues, s.eigenvectors, s.residuals);
      },
      py::arg("a"), py::arg("m"), py::arg("count") = 6, py::arg("shift") = -0.5, py::arg("tol") = 1e-8,
      "Smallest eigenpairs above the shift of A x = lambda M x (dense symmetric inputs, M positive definite).\n"
      "Returns (eigenvalues, M-orthonormal eigenvectors, residual norms).");

  // Moduli of continuity and Dini integrals
  py::class_<ModulusOfContinuity>(m, "Modulus")
      .def_static("power", &ModulusOfContinuity::power, py::arg("exponent"), py::arg("coefficient") = 1.0,
                  py::arg("cap") = std::numeric_limits<double>::infinity())
      .def_static("lipschitz_capped", &ModulusOfContinuity::lipschitz_capped, py::arg("slope"))
      .def_static("log_counterexample", &ModulusOfContinuity::log_counterexample)
      .def_static("scaled", &ModulusOfContinuity::scaled, py::arg("base"), py::arg("alpha"), py::arg("eps"))
      .def("__call__", &ModulusOfContinuity::operator(), py::arg("t"));
  m.def(
      "dini_integral",
      [](const ModulusOfContinuity& w, double t_min, double t_max) { return dini_dict(dini_integral(w, t_min, t_max)); },
      py::arg("omega"), py::arg("t_min"), py::arg("t_max"));
  m.def(
      "scaling_law_check",
      [](double alpha, const ModulusOfContinuity& w, const std::vector<double>& eps) {
        const ScalingLawReport r = scaling_law_check(alpha, w, eps);
        py::dict d;
        d["eps"] = r.eps;
        d["values"] = r.values;
        d["divergent"] = r.divergent;
        d["slope"] = r.slope;
        return d;
      },
      py::arg("alpha"), py::arg("omega_b"), py::arg("eps_list"));

  // Profiles and the D_{3/2} criterion
  py::class_<ProfileFunction>(m, "Profile")
      .def_static("constant", &ProfileFunction::constant, py::arg("c"))
      .def_static(
          "oscillatory",
          [](double alpha, double eps, double offset, double amplitude) {
            return ProfileFunction::oscillatory(alpha, eps, CosineCell{offset, amplitude});
          },
          py::arg("alpha"), py::arg("eps"), py::arg("offset") = 0.0, py::arg("amplitude") = 1.0)
      .def_static("hoelder_power", &ProfileFunction::hoelder_power, py::arg("coefficient"), py::arg("power"),
                  py::arg("center") = Vec2::Zero())
      .def_static("log_counterexample", &ProfileFunction::log_counterexample,
                  py::arg("cutoff") = 0.36787944117144233)
      .def_property_readonly("kind", [](const ProfileFunction& g) { return std::string(to_string(g.kind())); })
      .def("value", [](const ProfileFunction& g, const Vec2& x) { return g.value(x); }, py::arg("x"))
      .def("gradient", [](const ProfileFunction& g, const Vec2& x) { return g.gradient(x); }, py::arg("x"));
  m.def(
      "d32_seminorm",
      [](const ProfileFunction& g, const Vec2& xbar, double rho, double radius, int quad_n, int N) {
        return d32_seminorm(g, xbar, rho, ESet{radius, 0.0}, quad_n, N);
      },
      py::arg("profile"), py::arg("xbar"), py::arg("rho"), py::arg("radius"), py::arg("quad_n") = 16,
      py::arg("dimension") = 3);
  m.def(
      "mazya_criterion",
      [](const ProfileFunction& g, const Vec2& xbar, double delta, const std::vector<double>& rho_list, int N,
         int quad_n) {
        py::list out;
        for (const auto& r : mazya_criterion(g, xbar, delta, rho_list, N, quad_n)) {
          py::dict d;
          d["rho"] = r.rho;
          d["d32_term"] = r.d32_term;
          d["grad_sup"] = r.grad_sup;
          d["flagged"] = r.flagged;
          out.append(d);
        }
        return out;
      },
      py::arg("profile"), py::arg("xbar"), py::arg("delta"), py::arg("rho_list"), py::arg("dimension") = 3,
      py::arg("quad_n") = 16);

  // Run configs
  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("command", [](const RunConfig& c) { return std::string(to_string(c.command)); })
      .def_property(
          "output", [](const RunConfig& c) { return c.output; }, [](RunConfig& c, std::string o) { c.output = o; })
      .def_property_readonly("tau", [](const RunConfig& c) { return c.solver.tau; })
      .def_property_readonly("order", [](const RunConfig& c) { return c.solver.order; })
      .def_property_readonly("m", [](const RunConfig& c) { return c.solver.m; })
      .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; })
      .def("emit", &emit_config);
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<string>");
  m.def("load_config", &load_config, py::arg("path"));
  m.def("command_names", &command_names);
  m.def(
      "run",
      [](const RunConfig& c, const std::string& out_dir, bool verbose) {
        RunOptions o;
        o.out_dir = out_dir;
        o.verbose = verbose;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(c, o);
        }
        py::dict d;
        d["artifacts"] = r.artifacts;
        d["checks_passed"] = r.checks_passed;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = "", py::arg("verbose") = false);
}
