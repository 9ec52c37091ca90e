#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "valunlearn/data_io.hpp"
#include "valunlearn/errors.hpp"
#include "valunlearn/harness.hpp"
#include "valunlearn/model.hpp"
#include "valunlearn/report.hpp"
#include "valunlearn/unlearn.hpp"
#include "valunlearn/valuation.hpp"

namespace py = pybind11;
using namespace valunlearn;

namespace {

Objective make_objective(const std::string& loss, double lambda) {
  Objective o;
  o.loss = LossKind::parse(loss);
  o.lambda = lambda;
  return o;
}

ExperimentConfig config_from_dict(const std::map<std::string, std::string>& entries) {
  KeyValues kv;
  for (const auto& [k, v] : entries) kv.set(k, v);
  return ExperimentConfig::from_key_values(kv);
}

py::dict round_dict(const RoundRecord& r) {
  py::dict d;
  d["repetition"] = r.repetition;
  d["t"] = r.t;
  d["deleted"] = r.deleted;
  d["remaining"] = r.remaining;
  d["residual"] = r.residual;
  d["threshold"] = r.threshold;
  d["threshold0"] = r.threshold0;
  d["checked"] = r.checked;
  d["certified"] = r.certified;
  d["retrained"] = r.retrained;
  d["fallback"] = r.fallback;
  d["accuracy"] = r.metrics.accuracy;
  d["precision"] = r.metrics.precision;
  d["recall"] = r.metrics.recall;
  d["cost"] = r.metrics.misclassification_cost;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Certified unlearning with data value-weighted Newton updates";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BudgetExhausted>(m, "BudgetExhausted", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const FeatureMatrix& x, const Vector& y, std::optional<std::vector<PointId>> ids) {
             return ids ? Dataset(x, y, *ids) : Dataset(x, y);
           }),
           py::arg("features"), py::arg("labels"), py::arg("ids") = std::nullopt)
      .def_property_readonly("features", &Dataset::features)
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("ids", &Dataset::ids)
      .def_property_readonly("dim", &Dataset::dim)
      .def("__len__", &Dataset::size)
      .def("select", [](const Dataset& d, const std::vector<PointId>& ids) { return d.select(ids); })
      .def("without", [](const Dataset& d, const std::vector<PointId>& ids) { return d.without(ids); });

  py::class_<Metrics>(m, "Metrics")
      .def_readonly("accuracy", &Metrics::accuracy)
      .def_readonly("precision", &Metrics::precision)
      .def_readonly("recall", &Metrics::recall)
      .def_readonly("misclassification_cost", &Metrics::misclassification_cost);

  py::class_<ModelState>(m, "Model")
      .def_readonly("w", &ModelState::w)
      .def_readonly("H", &ModelState::H)
      .def_property_readonly("lam", &ModelState::lambda);

  m.def("gen_synthetic",
        [](const std::string& preset, long n, std::uint64_t seed) {
          SynthConfig c = SynthConfig::preset(preset, seed);
          if (n > 0) c.n = n;
          return gen_synthetic(c);
        },
        py::arg("preset") = "sy1", py::arg("n") = 0, py::arg("seed") = 0);
  m.def("load_csv",
        [](const std::string& path, const std::string& label, const std::string& positive) {
          return load_csv(path, label, positive);
        },
        py::arg("path"), py::arg("label") = "y", py::arg("positive") = "1");
  m.def("norm_bound", &norm_bound);

  m.def("train",
        [](const Dataset& data, const std::string& loss, double lam) {
          return train(data, make_objective(loss, lam));
        },
        py::arg("data"), py::arg("loss") = "logistic", py::arg("lam") = 1e-3);
  m.def("loss_value", [](const ModelState& model, const Dataset& data) { return loss_value(model, data); });
  m.def("gradient_residual",
        [](const Vector& w, const Dataset& data, const std::string& loss, double lam) {
          return gradient_residual(w, data, make_objective(loss, lam));
        },
        py::arg("w"), py::arg("data"), py::arg("loss") = "logistic", py::arg("lam") = 1e-3);
  m.def("evaluate", &evaluate, py::arg("w"), py::arg("test"), py::arg("cost_fp") = 1.0, py::arg("cost_fn") = 1.0);

  m.def("knn_sv", &knn_sv, py::arg("train"), py::arg("test"), py::arg("k") = 5);
  m.def("loo_values",
        [](const Dataset& train, const Dataset& validation, const std::string& loss, double lam) {
          return loo_values(train, validation, make_objective(loss, lam));
        },
        py::arg("train"), py::arg("validation"), py::arg("loss") = "logistic", py::arg("lam") = 1e-3);
  m.def("weight_from_value", &weight_from_value, py::arg("q"), py::arg("q_min_plus"), py::arg("alpha") = 0.5,
        py::arg("zero_tol") = 1e-9);
  m.def("weights_from_values",
        [](const ValueMap& q, double alpha, double zero_tol) { return make_profile(q, alpha, zero_tol).v; },
        py::arg("q"), py::arg("alpha") = 0.5, py::arg("zero_tol") = 1e-9);

  m.def("gauss_constant", &gauss_constant);
  m.def("parameter_gap_bound", &parameter_gap_bound, py::arg("C"), py::arg("beta"), py::arg("lam"), py::arg("n"),
        py::arg("removed"), py::arg("batch"));
  m.def("residual_bound", &residual_bound, py::arg("C"), py::arg("beta"), py::arg("lam"), py::arg("n"),
        py::arg("removed"), py::arg("batch"));
  m.def("zero_weight_residual_bound", &zero_weight_residual_bound, py::arg("C"), py::arg("n"),
        py::arg("removed"));

  m.def("newton_round",
        [](const Vector& w, const Matrix& H, const Dataset& deleted, std::optional<ValueMap> weights,
           long n_before, const std::string& loss, double lam) {
          const NewtonUpdate u =
              newton_round(w, H, deleted, weights ? &*weights : nullptr, n_before, make_objective(loss, lam));
          return py::make_tuple(u.w, u.H);
        },
        py::arg("w"), py::arg("H"), py::arg("deleted"), py::arg("weights") = std::nullopt, py::arg("n_before"),
        py::arg("loss") = "logistic", py::arg("lam") = 1e-3);

  m.def("run",
        [](const std::map<std::string, std::string>& config, std::optional<std::filesystem::path> out) {
          const ExperimentConfig parsed = config_from_dict(config);
          ExperimentReport report;
          {
            py::gil_scoped_release release;
            report = run_continuous_deletion(parsed);
            if (out) emit_report(report, *out);
          }
          py::list rounds;
          for (const auto& rep : report.repetitions) {
            for (const auto& r : rep.rounds) rounds.append(round_dict(r));
          }
          return rounds;
        },
        py::arg("config"), py::arg("out") = std::nullopt);
}
