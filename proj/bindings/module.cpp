#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hazreg/commands.hpp"
#include "hazreg/io.hpp"
#include "hazreg/likelihood.hpp"
#include "hazreg/penalties.hpp"
#include "hazreg/simulator.hpp"
#include "hazreg/solver.hpp"

namespace py = pybind11;
using namespace hazreg;

PYBIND11_MODULE(_hazreg, m) {
  m.doc() = "Time-varying additive hazard regression with total-variation penalties";

  py::enum_<Penalty>(m, "Penalty")
      .value("NONE", Penalty::None)
      .value("TV", Penalty::TV)
      .value("LOG", Penalty::Log);
  py::enum_<CensorType>(m, "CensorType")
      .value("INTERVAL", CensorType::Interval)
      .value("RIGHT", CensorType::Right);

  py::class_<ModelVariant>(m, "ModelVariant")
      .def(py::init([](const std::string& penalty, bool monotone, double gamma,
                       double epsilon) {
             ModelVariant v{penalty_from_string(penalty), monotone, gamma, epsilon};
             v.validate();
             return v;
           }),
           py::arg("penalty") = "none", py::arg("monotone") = false, py::arg("gamma") = 0.0,
           py::arg("epsilon") = 1.0)
      .def_property_readonly("penalty", [](const ModelVariant& v) { return to_string(v.penalty); })
      .def_readwrite("monotone", &ModelVariant::monotone)
      .def_readwrite("gamma", &ModelVariant::gamma)
      .def_readwrite("epsilon", &ModelVariant::epsilon);

  py::class_<KnotGrid, std::shared_ptr<KnotGrid>>(m, "KnotGrid")
      .def(py::init<std::vector<double>>(), py::arg("times"))
      .def_property_readonly("times", &KnotGrid::times)
      .def_property_readonly("horizon", &KnotGrid::horizon)
      .def("segment_index", &KnotGrid::segment_index)
      .def("__len__", &KnotGrid::size);

  py::class_<StepFunction>(m, "StepFunction")
      .def(py::init<GridPtr, std::vector<double>>(), py::arg("grid"), py::arg("values"))
      .def_property_readonly("values",
                             [](const StepFunction& f) { return f.values(); })
      .def("__call__", &StepFunction::operator())
      .def("integral_to", &StepFunction::integral_to);

  py::class_<FeatureTrack>(m, "FeatureTrack")
      .def(py::init([](int feature_id, std::vector<std::pair<double, double>> events) {
             FeatureTrack t{feature_id, std::move(events)};
             t.validate("<python>");
             return t;
           }),
           py::arg("feature_id"), py::arg("events"))
      .def_readonly("feature_id", &FeatureTrack::feature_id)
      .def_readonly("events", &FeatureTrack::events)
      .def("value_at", &FeatureTrack::value_at);

  py::class_<Observation>(m, "Observation")
      .def_static("interval_censored", &Observation::interval_censored, py::arg("site_id"),
                  py::arg("t_lo"), py::arg("t_hi"), py::arg("weight") = 1.0)
      .def_static("right_censored", &Observation::right_censored, py::arg("site_id"),
                  py::arg("t"), py::arg("weight") = 1.0)
      .def_static("exact_event", &Observation::exact_event, py::arg("site_id"), py::arg("t"),
                  py::arg("horizon"), py::arg("weight") = 1.0)
      .def_readonly("site_id", &Observation::site_id)
      .def_readonly("censor", &Observation::censor)
      .def_readonly("t_lo", &Observation::t_lo)
      .def_readonly("t_hi", &Observation::t_hi)
      .def_readonly("weight", &Observation::weight)
      .def_readwrite("tracks", &Observation::tracks)
      .def("add_track", [](Observation& o, const FeatureTrack& t) { o.tracks.push_back(t); });

  py::class_<CoefficientSet>(m, "CoefficientSet")
      .def_static("zeros", &CoefficientSet::zeros, py::arg("grid"), py::arg("d"),
                  py::arg("variant"))
      .def_readwrite("w0", &CoefficientSet::w0)
      .def_readwrite("w", &CoefficientSet::w)
      .def_readonly("variant", &CoefficientSet::variant)
      .def_property_readonly("grid", [](const CoefficientSet& c) { return c.grid(); })
      .def_property_readonly("dim", &CoefficientSet::dim)
      .def("validate", &CoefficientSet::validate);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("eta", &SolverConfig::eta)
      .def_readwrite("minibatch", &SolverConfig::minibatch)
      .def_readwrite("epochs", &SolverConfig::epochs)
      .def_readwrite("warmup_epochs", &SolverConfig::warmup_epochs)
      .def_readwrite("full_grad_every", &SolverConfig::full_grad_every)
      .def_readwrite("adagrad", &SolverConfig::adagrad)
      .def_readwrite("adagrad_eps", &SolverConfig::adagrad_eps)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("tol", &SolverConfig::tol);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("coeffs", &FitResult::coeffs)
      .def_readonly("objective_trace", &FitResult::objective_trace)
      .def_readonly("train_nll_trace", &FitResult::train_nll_trace)
      .def_readonly("test_nll_trace", &FitResult::test_nll_trace)
      .def_readonly("passes", &FitResult::passes)
      .def_readonly("converged", &FitResult::converged);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("n_sites", &SimConfig::n_sites)
      .def_readwrite("n_features", &SimConfig::n_features)
      .def_readwrite("n_exploits", &SimConfig::n_exploits)
      .def_readwrite("horizon", &SimConfig::horizon)
      .def_readwrite("monotone_truth", &SimConfig::monotone_truth)
      .def_readwrite("max_campaigns_per_exploit", &SimConfig::max_campaigns_per_exploit)
      .def_readwrite("hazard_lo", &SimConfig::hazard_lo)
      .def_readwrite("hazard_hi", &SimConfig::hazard_hi)
      .def_readwrite("baseline_rate", &SimConfig::baseline_rate)
      .def_readwrite("checkpoint_rate", &SimConfig::checkpoint_rate)
      .def_readwrite("feature_prob", &SimConfig::feature_prob)
      .def_readwrite("seed", &SimConfig::seed);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("coeffs", &GroundTruth::coeffs)
      .def_readonly("exploit_ids", &GroundTruth::exploit_ids);

  m.def("build_knot_grid",
        [](const std::vector<Observation>& obs, double horizon) {
          return std::make_shared<KnotGrid>(build_knot_grid(obs, horizon));
        },
        py::arg("observations"), py::arg("horizon"));
  m.def("eval_hazard", &eval_hazard, py::arg("coeffs"), py::arg("obs"), py::arg("t"));
  m.def("eval_cumulative_hazard", &eval_cumulative_hazard, py::arg("coeffs"), py::arg("obs"),
        py::arg("t"));

  m.def("neg_log_likelihood", &neg_log_likelihood, py::arg("coeffs"), py::arg("obs"));
  m.def("gradient",
        [](const CoefficientSet& coeffs, const Observation& obs) {
          return gradient(coeffs, obs).entries;
        },
        py::arg("coeffs"), py::arg("obs"),
        "Sparse dict {(coefficient j, segment l): d nll / d w_j[l]}");
  m.def("dataset_objective", &dataset_objective, py::arg("coeffs"), py::arg("data"),
        py::arg("variant"));

  m.def("tv_discrete", &tv_discrete, py::arg("values"));
  m.def("tv_log_discrete", &tv_log_discrete, py::arg("values"), py::arg("epsilon"));
  m.def("xi_gradient", &xi_gradient, py::arg("values"), py::arg("epsilon"));
  m.def("project_nonneg", &project_nonneg, py::arg("values"));
  m.def("prox_fused_lasso", &prox_fused_lasso, py::arg("values"), py::arg("gamma"));
  m.def("prox_fused_isotonic", &prox_fused_isotonic, py::arg("values"), py::arg("gamma"));
  m.def("prox_full", &prox_full, py::arg("values"), py::arg("variant"),
        py::arg("step_scaled_gamma"));

  m.def("fit",
        [](const std::vector<Observation>& data, GridPtr grid, const ModelVariant& variant,
           const SolverConfig& cfg, const std::optional<std::vector<Observation>>& test,
           std::size_t n_features) {
          return fit(data, std::move(grid), variant, cfg, test ? &*test : nullptr, n_features);
        },
        py::arg("data"), py::arg("grid"), py::arg("variant"),
        py::arg("config") = SolverConfig{}, py::arg("test_data") = std::nullopt,
        py::arg("n_features") = 0);
  m.def("evaluate", &evaluate, py::arg("coeffs"), py::arg("data"));
  m.def("count_active_breakpoints", &count_active_breakpoints, py::arg("coeffs"),
        py::arg("tol") = 1e-6);

  m.def("generate_truth", &generate_truth, py::arg("config"));
  m.def("generate_observations",
        [](const GroundTruth& truth, const SimConfig& cfg, std::uint64_t site_stream) {
          return generate_observations(truth, cfg, site_stream);
        },
        py::arg("truth"), py::arg("config"), py::arg("site_stream") = 0);
  m.def("generate_dataset", &generate_dataset, py::arg("config"));

  m.def("save_model",
        [](const std::string& path, const CoefficientSet& coeffs,
           const std::vector<std::string>& feature_names,
           const std::map<std::string, std::string>& metadata) {
          ModelFile model{1, coeffs, FeatureDict::from_names(feature_names), metadata};
          save_model(path, model);
        },
        py::arg("path"), py::arg("coeffs"), py::arg("feature_names"),
        py::arg("metadata") = std::map<std::string, std::string>{});
  m.def("load_model", [](const std::string& path) {
    ModelFile model = load_model(path);
    return py::make_tuple(model.coeffs, model.dict.names, model.metadata);
  });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"hazreg"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  });
}
