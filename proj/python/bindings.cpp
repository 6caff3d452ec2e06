#include "periodic_heat/bloch.hpp"
#include "periodic_heat/errors.hpp"
#include "periodic_heat/heat.hpp"
#include "periodic_heat/hodge.hpp"
#include "periodic_heat/periodic_complex.hpp"
#include "periodic_heat/presets.hpp"
#include "periodic_heat/report.hpp"
#include "periodic_heat/walk.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace periodic_heat;

namespace {

// Report structs reach Python as plain dicts through their JSON form.
py::object to_python(const report::Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

LatticeVector to_lattice(const std::vector<int>& v) {
  return Eigen::Map<const Eigen::VectorXi>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bloch::Gauge gauge_of(const std::string& name) {
  if (name == "phase") return bloch::Gauge::phase;
  if (name == "harmonic") return bloch::Gauge::harmonic;
  throw ParameterError("bloch", "gauge", "expected 'phase' or 'harmonic'");
}

heat::Window window_of(int k, int radius) { return heat::box_window(k, radius); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Effective geometry and heat asymptotics of periodic weighted graphs";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());

  py::class_<PeriodicComplex>(m, "PeriodicComplex")
      .def_property_readonly("rank", &PeriodicComplex::rank)
      .def_property_readonly("num_vertices", &PeriodicComplex::num_vertices)
      .def_property_readonly("num_edges", &PeriodicComplex::num_edges)
      .def_property_readonly("volume", &PeriodicComplex::volume)
      .def_property_readonly("mu", [](const PeriodicComplex& c) { return Eigen::VectorXd(c.mu_vector()); })
      .def_property_readonly("edges",
                             [](const PeriodicComplex& c) {
                               py::list out;
                               for (const Edge& e : c.edges())
                                 out.append(py::dict(py::arg("tail") = e.tail, py::arg("head") = e.head,
                                                     py::arg("w") = e.w, py::arg("ell") = e.ell,
                                                     py::arg("shift") = Eigen::VectorXi(e.shift)));
                               return out;
                             })
      .def("validate", [](const PeriodicComplex& c) { return to_python(report::to_json(c.report())); })
      .def("to_text", [](const PeriodicComplex& c) { return to_string(c); })
      .def("__eq__", [](const PeriodicComplex& a, const PeriodicComplex& b) { return a == b; })
      .def("__repr__", [](const PeriodicComplex& c) {
        std::ostringstream s;
        s << "PeriodicComplex(rank=" << c.rank() << ", vertices=" << c.num_vertices() << ", edges=" << c.num_edges()
          << ")";
        return s.str();
      });

  m.def("from_text", [](const std::string& text) {
    std::istringstream in(text);
    return load(in);
  }, py::arg("text"));
  m.def("load", &load_file, py::arg("path"));
  m.def("save", py::overload_cast<const PeriodicComplex&, const std::string&>(&save), py::arg("complex"), py::arg("path"));
  m.def("supercell", [](const PeriodicComplex& c, int N) { return supercell(c, N).complex; }, py::arg("complex"),
        py::arg("N"));
  m.def("scale_weights", &scale_weights, py::arg("complex"), py::arg("mu_factor"), py::arg("w_factor"));

  // presets
  m.def("preset_names", &presets::preset_names);
  m.def("loop_z", &presets::loop_z, py::arg("mu") = 1.0, py::arg("w") = 1.0, py::arg("ell") = 1.0,
        py::arg("shift") = 1);
  m.def("chain", &presets::chain, py::arg("m"), py::arg("w") = std::vector<double>{},
        py::arg("mu") = std::vector<double>{}, py::arg("ell") = std::vector<double>{});
  m.def("parallel_edges", &presets::parallel_edges, py::arg("w"), py::arg("mu") = 1.0);
  m.def("grid_flat", &presets::grid_flat, py::arg("n"));
  m.def("grid_conformal",
        [](int n, const std::string& field, double amplitude) {
          return presets::grid_conformal(n, presets::named_scalar_field(field, amplitude));
        },
        py::arg("n"), py::arg("field") = "sin_x", py::arg("amplitude") = 0.1);
  m.def("grid_anisotropic",
        [](int n, const std::string& field, double amplitude) {
          return presets::grid_anisotropic(n, presets::named_metric_field(field, amplitude));
        },
        py::arg("n"), py::arg("field") = "shear", py::arg("amplitude") = 0.1);
  m.def("random_weights", &presets::random_weights, py::arg("k"), py::arg("n"), py::arg("seed"),
        py::arg("spread") = 3.0);

  // hodge
  m.def("d0", &hodge::d0, py::arg("complex"), py::arg("f"));
  m.def("adjoint_d0", &hodge::adjoint_d0, py::arg("complex"), py::arg("a"));
  m.def("shift_cocycle", &hodge::shift_cocycle, py::arg("complex"), py::arg("j"));
  m.def("harmonic_representative",
        [](const PeriodicComplex& c, int j) {
          const auto h = hodge::harmonic_representative(c, j);
          return py::dict(py::arg("tau") = h.tau, py::arg("potential") = h.potential,
                          py::arg("residual") = h.residual);
        },
        py::arg("complex"), py::arg("j"));
  m.def("effective_metric", [](const PeriodicComplex& c) { return to_python(report::to_json(hodge::effective_metric(c))); },
        py::arg("complex"));

  // bloch
  m.def("bloch_operator",
        [](const PeriodicComplex& c, const Eigen::VectorXd& theta, const std::string& gauge) {
          return bloch::assemble(c, bloch::BlochPoint(theta), gauge_of(gauge)).dense();
        },
        py::arg("complex"), py::arg("theta"), py::arg("gauge") = "phase");
  m.def("spectrum",
        [](const PeriodicComplex& c, const Eigen::VectorXd& theta, std::size_t count, const std::string& gauge) {
          return bloch::spectrum(bloch::assemble(c, bloch::BlochPoint(theta), gauge_of(gauge)), count).eigenvalues;
        },
        py::arg("complex"), py::arg("theta"), py::arg("count"), py::arg("gauge") = "phase");
  m.def("heat_trace",
        [](const PeriodicComplex& c, const Eigen::VectorXd& theta, double t) {
          return bloch::heat_trace(bloch::assemble(c, bloch::BlochPoint(theta)), t).value;
        },
        py::arg("complex"), py::arg("theta"), py::arg("t"));
  m.def("band_hessian_perturbative",
        [](const PeriodicComplex& c, const std::string& gauge) {
          return bloch::band_hessian_perturbative(bloch::BlochFamily(c), gauge_of(gauge));
        },
        py::arg("complex"), py::arg("gauge") = "phase");
  m.def("band_hessian_fd", [](const PeriodicComplex& c, double h) { return bloch::band_hessian_fd(bloch::BlochFamily(c), h); },
        py::arg("complex"), py::arg("h") = 1e-3);
  m.def("gap_scan",
        [](const PeriodicComplex& c, int n_g, double r) {
          return to_python(report::to_json(bloch::gap_scan(bloch::BlochFamily(c), n_g, r)));
        },
        py::arg("complex"), py::arg("n_g"), py::arg("r"));

  // heat
  m.def("heat_kernel_lattice",
        [](const PeriodicComplex& c, double t, int N, int radius) {
          return to_python(report::to_json(heat::heat_kernel_lattice(c, t, N, window_of(c.rank(), radius))));
        },
        py::arg("complex"), py::arg("t"), py::arg("N") = 0, py::arg("radius") = 2,
        "k(t, v) on the box |v_j| <= radius; N = 0 picks the quadrature size automatically.");
  m.def("supercell_oracle",
        [](const PeriodicComplex& c, double t, int N, int radius) {
          return to_python(report::to_json(heat::supercell_oracle(c, t, N, window_of(c.rank(), radius))));
        },
        py::arg("complex"), py::arg("t"), py::arg("N"), py::arg("radius"));
  m.def("gaussian_value",
        [](const PeriodicComplex& c, double t, const std::vector<int>& v) {
          return heat::gaussian_value(hodge::effective_metric(c), t, to_lattice(v));
        },
        py::arg("complex"), py::arg("t"), py::arg("v"));
  m.def("asymptotic_error_scan",
        [](const PeriodicComplex& c, const std::vector<double>& t_list, double C) {
          heat::AsymptoticOptions opts;
          opts.C = C;
          return to_python(report::to_json(heat::asymptotic_error_scan(bloch::BlochFamily(c), t_list, opts)));
        },
        py::arg("complex"), py::arg("t_list"), py::arg("C") = 9.0);

  // walk
  m.def("sample_displacements",
        [](const PeriodicComplex& c, double t, std::size_t count, std::uint64_t seed) {
          return walk::sample_displacements(c, t, count, seed).displacements;
        },
        py::arg("complex"), py::arg("t"), py::arg("count"), py::arg("seed"));
  m.def("covariance_check",
        [](const PeriodicComplex& c, double t, std::size_t count, std::uint64_t seed) {
          const auto sample = walk::sample_displacements(c, t, count, seed);
          return to_python(report::to_json(walk::covariance_check(sample, hodge::effective_metric(c))));
        },
        py::arg("complex"), py::arg("t"), py::arg("count"), py::arg("seed"));
  m.def("stable_norm",
        [](const PeriodicComplex& c, const std::vector<int>& v, int n_max) {
          return to_python(report::to_json(walk::stable_norm(c, to_lattice(v), n_max)));
        },
        py::arg("complex"), py::arg("v"), py::arg("n_max") = 16);
}
