#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chainmean/applications.hpp"
#include "chainmean/chaining.hpp"
#include "chainmean/gaussian_width.hpp"
#include "chainmean/harness.hpp"
#include "chainmean/scalar_est.hpp"

namespace py = pybind11;
using namespace chainmean;

namespace {

TransformPair make_transform(const std::string& kind, double p) {
  if (kind == "square") return TransformPair::square();
  if (kind == "abs_power") return TransformPair::abs_power(p);
  if (kind == "identity") return TransformPair::identity();
  throw Error(ErrorCode::InvalidArgument, "u must be square, abs_power or identity");
}

UniformFitOptions make_options(double delta, double eta, const std::string& estimator,
                               const std::optional<Matrix>& prior) {
  UniformFitOptions o;
  o.delta = delta;
  o.eta = eta;
  if (estimator == "trimmed") o.estimator = EstimatorKind::TrimmedMean;
  else if (estimator != "mom") throw Error(ErrorCode::InvalidArgument, "estimator must be mom or trimmed");
  o.prior_covariance = prior;
  return o;
}

py::dict schedule_dict(const LevelSchedule& s) {
  py::dict d;
  d["n"] = s.n;
  d["delta"] = s.delta;
  d["eta"] = s.eta;
  d["s0"] = s.s0;
  d["s1"] = s.s1;
  d["trivial"] = s.trivial_case;
  return d;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Chaining-based uniform mean estimation";

  static py::exception<Error> error_type(m, "ChainmeanError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error_type.ptr(), e.what());
    }
  });

  m.def("block_count",
        [](std::size_t n, double delta, double eta) { return block_count(n, Confidence::from_delta(delta), eta); },
        py::arg("n"), py::arg("delta"), py::arg("eta") = 0.0);
  m.def("median_of_means",
        [](const std::vector<double>& x, double delta) { return median_of_means(x, delta); },
        py::arg("x"), py::arg("delta"));
  m.def("mom_corrupted",
        [](const std::vector<double>& x, double delta, double eta) { return mom_corrupted(x, delta, eta); },
        py::arg("x"), py::arg("delta"), py::arg("eta"));
  m.def("trimmed_mean",
        [](const std::vector<double>& x, double delta, double eta) { return trimmed_mean(x, delta, eta); },
        py::arg("x"), py::arg("delta"), py::arg("eta") = 0.0);

  m.def(
      "estimate",
      [](const Matrix& sample, const Matrix& directions, const std::string& u, double p, double delta,
         double eta, const std::string& estimator, const std::optional<Matrix>& prior_covariance) {
        const auto fit = fit_linear_class_detailed(Sample(sample), directions, make_transform(u, p),
                                                   make_options(delta, eta, estimator, prior_covariance));
        py::dict out;
        out["values"] = fit.estimate.values;
        out["base"] = fit.estimate.base;
        out["per_level"] = fit.estimate.per_level;
        out["trivial"] = fit.estimate.trivial;
        out["schedule"] = schedule_dict(fit.estimate.schedule);
        out["sequence"] = to_python(sequence_to_json(fit.sequence, FunctionClass::linear(directions)));
        return out;
      },
      py::arg("sample"), py::arg("directions"), py::arg("u") = "square", py::arg("p") = 2.0,
      py::arg("delta") = 0.01, py::arg("eta") = 0.0, py::arg("estimator") = "mom",
      py::arg("prior_covariance") = std::nullopt,
      "Psi over the linear class of `directions` (rows) on `sample` (rows).");

  m.def(
      "covariance",
      [](const Matrix& sample, double delta, double eta, const std::optional<Matrix>& prior_covariance) {
        const CovarianceEstimate est =
            covariance_estimate(Sample(sample), make_options(delta, eta, "mom", prior_covariance));
        return py::make_tuple(est.matrix, to_python(covariance_diagnostics_json(est)));
      },
      py::arg("sample"), py::arg("delta") = 0.01, py::arg("eta") = 0.0,
      py::arg("prior_covariance") = std::nullopt, "Returns (matrix, diagnostics).");

  m.def("psd_project", &psd_project, py::arg("m"));
  m.def("covariance_direction_set", &covariance_direction_set, py::arg("d"));

  py::class_<LpOracle>(m, "LpOracle")
      .def(py::init<double, Matrix, std::vector<double>, double>(), py::arg("p"), py::arg("directions"),
           py::arg("psi_values"), py::arg("epsilon") = 0.0)
      .def_static(
          "fit",
          [](const Matrix& sample, const Matrix& directions, double p, double delta, double eta, double epsilon) {
            return LpOracle::fit(Sample(sample), directions, p, make_options(delta, eta, "mom", std::nullopt),
                                 epsilon);
          },
          py::arg("sample"), py::arg("directions"), py::arg("p"), py::arg("delta") = 0.01, py::arg("eta") = 0.0,
          py::arg("epsilon") = 0.0)
      .def_property_readonly("p", &LpOracle::p)
      .def_property_readonly("psi_values", &LpOracle::psi_values)
      .def("psi1", [](const LpOracle& o, const Vector& z) { return lp_psi1(o, z); }, py::arg("z"))
      .def("contains", [](const LpOracle& o, const Vector& z) { return lp_membership(o, z); }, py::arg("z"))
      .def("boundary_radius", &LpOracle::boundary_radius, py::arg("direction"));

  m.def(
      "gaussian_width",
      [](const Matrix& directions, const std::optional<Matrix>& covariance, std::size_t draws, std::uint64_t seed,
         std::size_t workers) {
        const auto d = directions.cols();
        const WidthEstimate w = gaussian_sup(FunctionClass::linear(directions),
                                             covariance.value_or(Matrix::Identity(d, d)), draws, seed, workers);
        py::dict out;
        out["mean"] = w.mean;
        out["std_error"] = w.std_error;
        out["draws"] = w.draws;
        out["seed"] = w.seed;
        out["workers"] = w.workers;
        return out;
      },
      py::arg("directions"), py::arg("covariance") = std::nullopt, py::arg("draws") = 10000,
      py::arg("seed") = 0, py::arg("workers") = 1);

  m.def(
      "simulate",
      [](const py::object& config) {
        const auto records = run_experiment(experiment_config_from_json(from_python(config)));
        return to_python(records_to_json(records));
      },
      py::arg("config"), "Runs an experiment from a config dict; returns one dict per trial.");
  m.def(
      "simulate_csv",
      [](const py::object& config) { return records_to_csv(run_experiment(experiment_config_from_json(from_python(config)))); },
      py::arg("config"));
}
