#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "bandtrace/bands.hpp"
#include "bandtrace/experiments.hpp"
#include "bandtrace/fibre.hpp"
#include "bandtrace/finsec.hpp"
#include "bandtrace/kernel.hpp"
#include "bandtrace/report.hpp"
#include "bandtrace/test_function.hpp"

namespace py = pybind11;
using namespace bandtrace;

namespace {

// Band structure, classification and a lazily built kernel evaluator for one (V, mu).
class Problem {
 public:
  Problem(const fibre::PeriodicPotential& v, double mu, int cutoff, double touch_tol, double edge_tol)
      : p_(experiments::prepare_problem(v, mu, cutoff, touch_tol, edge_tol)), edge_tol_(edge_tol) {}

  double mu() const { return p_.mu; }
  double ids() const { return p_.ids; }
  std::string classification() const { return bands::to_string(p_.classification.kind); }

  double delta() const {
    if (p_.classification.kind != bands::MuClass::Interior) {
      throw std::domain_error("delta is defined only for interior mu");
    }
    return bands::solve_delta(band(), p_.mu);
  }

  const kernel::KernelEvaluator& evaluator(double alpha_max) {
    if (!ev_ || ev_->alpha_max() < alpha_max) {
      kernel::KernelOptions o;
      o.alpha_max = alpha_max;
      o.edge_tol = edge_tol_;
      ev_ = p_.classification.kind == bands::MuClass::Edge
                ? kernel::make_edge_evaluator(p_.bands, p_.mu, o)
                : kernel::make_evaluator(p_.bands, p_.mu, o);
    }
    return *ev_;
  }

  py::array_t<double> kernel(py::array_t<double, py::array::forcecast> x,
                             py::array_t<double, py::array::forcecast> y, double alpha_max) {
    auto bx = x.request();
    auto by = y.request();
    if (bx.size != by.size) throw std::invalid_argument("x and y must have the same size");
    const auto& ev = evaluator(alpha_max);
    py::array_t<double> out(bx.shape);
    auto* o = static_cast<double*>(out.request().ptr);
    const auto* px = static_cast<const double*>(bx.ptr);
    const auto* py_ = static_cast<const double*>(by.ptr);
    {
      py::gil_scoped_release release;
      for (py::ssize_t i = 0; i < bx.size; ++i) o[i] = kernel::kernel_P(ev, px[i], py_[i]);
    }
    return out;
  }

  std::vector<double> section_spectrum(double alpha, double spacing) {
    const auto& ev = evaluator(alpha);
    py::gil_scoped_release release;
    return finsec::section_spectrum(finsec::assemble_section(ev, alpha, spacing)).eigenvalues;
  }

  py::dict decay_probe(const std::string& mode, double x0, double max_sep) {
    kernel::DecayMode dm = kernel::DecayMode::Interior;
    std::optional<kernel::LeadingKernel> lead;
    if (mode == "gap" || mode == "edge") {
      dm = kernel::DecayMode::GapOrEdge;
    } else if (mode == "remainder") {
      lead.emplace(band(), delta());
      dm = kernel::DecayMode::Remainder;
    } else if (mode != "interior") {
      throw ValidationError("mode must be interior, gap, edge or remainder");
    }
    const auto& ev = evaluator(0.5 * max_sep + 2.0 * std::numbers::pi);
    const auto rep = kernel::decay_probe(ev, dm, x0, max_sep, lead ? &*lead : nullptr);
    py::dict d;
    d["separations"] = rep.separations;
    d["amplitudes"] = rep.amplitudes;
    d["fitted_exponent"] = rep.fitted_exponent;
    return d;
  }

 private:
  const bands::GenuineBand& band() const {
    return p_.bands.genuine.at(static_cast<std::size_t>(p_.classification.genuine_index));
  }

  experiments::Problem p_;
  double edge_tol_;
  std::optional<kernel::KernelEvaluator> ev_;
};

double trace_of(const std::vector<double>& eigenvalues, const std::string& function) {
  finsec::SectionSpectrum sp;
  sp.eigenvalues = eigenvalues;
  return finsec::trace_h(sp, TestFunction::parse(function));
}

py::dict sweep_to_dict(const experiments::SweepResult& res) {
  py::list rows;
  for (const auto& r : res.rows) rows.append(py::make_tuple(r.alpha, r.function, r.trace, r.eigencount));
  py::dict d;
  d["rows"] = rows;
  d["config_hash"] = res.config_hash;
  d["classification"] = std::string(bands::to_string(res.classification));
  d["mu"] = res.mu;
  d["ids"] = res.ids;
  d["widom"] = res.widom;
  return d;
}

py::dict fit_to_dict(const experiments::FitReport& f) {
  py::dict d;
  d["function"] = f.function;
  d["rows_used"] = f.rows_used;
  d["linear_dropped"] = f.linear_dropped;
  d["a"] = f.a;
  d["b"] = f.b;
  d["c"] = f.c;
  d["residual_rms"] = f.residual_rms;
  d["a_target"] = f.a_target;
  d["b_target"] = f.b_target;
  d["b_deviation"] = f.b_deviation ? py::cast(*f.b_deviation) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite sections of periodic Fermi projections and their log-corrected traces.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<EigensolverError>(m, "EigensolverError", PyExc_RuntimeError);

  py::class_<fibre::PeriodicPotential>(m, "Potential")
      .def_static("zero", &fibre::PeriodicPotential::zero, py::arg("order") = 0)
      .def_static("cosine", &fibre::PeriodicPotential::cosine, py::arg("amplitude"), py::arg("order") = 1)
      .def_static("from_coefficients", &fibre::PeriodicPotential::from_coefficients, py::arg("coefficients"),
                  py::arg("order") = 0, py::arg("tol") = 1e-12)
      .def_static("preset", [](const std::string& s) { return fibre::potential_from_spec(s); })
      .def_property_readonly("order", &fibre::PeriodicPotential::order)
      .def("coefficient", &fibre::PeriodicPotential::coefficient)
      .def("__call__", &fibre::PeriodicPotential::value)
      .def("__repr__", &fibre::PeriodicPotential::describe);

  m.def("fibre_eigenvalues", &fibre::fibre_eigenvalues, py::arg("potential"), py::arg("k"),
        py::arg("cutoff") = fibre::kDefaultCutoff);

  m.def(
      "band_edges",
      [](const fibre::PeriodicPotential& v, double e_max, int cutoff, double touch_tol) {
        const auto bs = bands::group_genuine(bands::compute_bands(v, e_max, cutoff), touch_tol);
        py::list out;
        for (const auto& b : bs.bands) out.append(py::make_tuple(b.j, b.k_j, b.mu, b.nu, bs.genuine_group_of(b.j)));
        return out;
      },
      py::arg("potential"), py::arg("e_max"), py::arg("cutoff") = fibre::kDefaultCutoff,
      py::arg("touch_tol") = bands::kDefaultTouchTol,
      "Rows (j, k_j, mu_j, nu_j, genuine_group_id).");

  py::class_<Problem>(m, "Problem")
      .def(py::init<const fibre::PeriodicPotential&, double, int, double, double>(), py::arg("potential"),
           py::arg("mu"), py::arg("cutoff") = fibre::kDefaultCutoff,
           py::arg("touch_tol") = bands::kDefaultTouchTol, py::arg("edge_tol") = bands::kDefaultEdgeTol)
      .def_property_readonly("mu", &Problem::mu)
      .def_property_readonly("ids", &Problem::ids)
      .def_property_readonly("classification", &Problem::classification)
      .def("delta", &Problem::delta)
      .def("kernel", &Problem::kernel, py::arg("x"), py::arg("y"), py::arg("alpha_max") = 50.0)
      .def("section_spectrum", &Problem::section_spectrum, py::arg("alpha"),
           py::arg("spacing") = finsec::kDefaultSpacing)
      .def("decay_probe", &Problem::decay_probe, py::arg("mode"), py::arg("x0") = 0.0,
           py::arg("max_sep") = 200.0);

  m.def("trace_h", &trace_of, py::arg("eigenvalues"), py::arg("function"));
  m.def(
      "schatten_q",
      [](const std::vector<double>& eigenvalues, double q) {
        finsec::SectionSpectrum sp;
        sp.eigenvalues = eigenvalues;
        return finsec::schatten_q(sp, q);
      },
      py::arg("eigenvalues"), py::arg("q"));
  m.def(
      "widom_coefficient",
      [](const std::string& f) { return finsec::widom_coefficient(TestFunction::parse(f)); },
      py::arg("function"));
  m.def("lw_trace", &finsec::lw_trace, py::arg("alpha"), py::arg("n"), py::arg("spacing") = 0.25);

  m.def(
      "run_sweep",
      [](const std::string& config_json) {
        const auto cfg = experiments::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        experiments::SweepResult res;
        {
          py::gil_scoped_release release;
          res = experiments::run_sweep(cfg);
        }
        return sweep_to_dict(res);
      },
      py::arg("config_json"));
  m.def(
      "fit_csv",
      [](const std::string& csv, const std::string& function, double alpha_min) {
        return fit_to_dict(experiments::fit_asymptotics(experiments::read_sweep(csv), function, alpha_min));
      },
      py::arg("csv"), py::arg("function"), py::arg("alpha_min") = experiments::kDefaultAlphaMin);
}
