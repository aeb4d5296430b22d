#include "hazreg/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hazreg/likelihood.hpp"

namespace hazreg {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string feature_label(int width, int j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%0*d", std::min(width, 9), j);
  return buf;
}

FeatureDict simulated_dict(int n_features) {
  int width = 1;
  for (int n = n_features; n >= 10; n /= 10) ++width;
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n_features));
  for (int j = 1; j <= n_features; ++j) names.push_back(feature_label(width, j));
  return FeatureDict{std::move(names)};
}

struct LoadedDataset {
  std::vector<Observation> observations;
  RawDataset raw;
};

LoadedDataset load_dataset(const std::string& obs_path, const std::string& feat_path,
                           const FeatureDict& dict) {
  LoadedDataset out;
  out.raw = read_observations(obs_path);
  if (!feat_path.empty()) read_feature_events(feat_path, out.raw);
  std::size_t skipped = 0;
  out.observations = materialize(out.raw, dict, &skipped);
  if (skipped > 0)
    std::cerr << "warning: " << obs_path << ": dropped " << skipped
              << " track(s) whose feature is not in the dictionary\n";
  return out;
}

}  // namespace

int cmd_simulate(const SimulateArgs& args) {
  args.config.validate();
  auto [observations, truth] = [&] {
    GroundTruth t = generate_truth(args.config);
    std::vector<Observation> obs = generate_observations(t, args.config, args.site_stream);
    return std::make_pair(std::move(obs), std::move(t));
  }();

  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);
  const std::string base = (fs::path(args.out_dir) / args.prefix).string();
  FeatureDict dict = simulated_dict(args.config.n_features);

  write_observations(base + "observations.csv", observations);
  write_feature_events(base + "features.csv", observations, dict);

  ModelFile truth_model{1, truth.coeffs, dict, {}};
  truth_model.metadata["kind"] = "ground-truth";
  truth_model.metadata["seed"] = std::to_string(args.config.seed);
  truth_model.metadata["site_stream"] = std::to_string(args.site_stream);
  std::string exploits;
  for (int id : truth.exploit_ids)
    exploits += (exploits.empty() ? "" : " ") + dict.names[static_cast<std::size_t>(id) - 1];
  truth_model.metadata["exploits"] = exploits;
  save_model(base + "truth.json", truth_model);

  std::size_t hacked = 0;
  for (const auto& obs : observations)
    if (obs.censor == CensorType::Interval) ++hacked;
  std::printf("simulated %zu sites: %zu hacked (%.1f%%), %zu right-censored\n",
              observations.size(), hacked,
              observations.empty() ? 0.0 : 100.0 * static_cast<double>(hacked) /
                                               static_cast<double>(observations.size()),
              observations.size() - hacked);
  std::printf("wrote %sobservations.csv, %sfeatures.csv, %struth.json\n", base.c_str(),
              base.c_str(), base.c_str());
  return 0;
}

int cmd_fit(const FitArgs& args) {
  RawDataset train_raw = read_observations(args.train_observations);
  if (!args.train_features.empty()) read_feature_events(args.train_features, train_raw);
  FeatureDict dict = FeatureDict::from_names(train_raw.feature_names);

  double horizon = args.horizon;
  if (horizon <= 0.0) {
    horizon = infer_horizon(train_raw);
    std::cerr << "warning: no --horizon given; using the largest data time "
              << format_double(horizon) << '\n';
  }

  std::size_t skipped = 0;
  std::vector<Observation> train = materialize(train_raw, dict, &skipped);

  std::vector<Observation> test;
  bool have_test = !args.test_observations.empty();
  if (have_test) {
    LoadedDataset t = load_dataset(args.test_observations, args.test_features, dict);
    test = std::move(t.observations);
  }

  auto grid = std::make_shared<const KnotGrid>(build_knot_grid(train, horizon));
  FitResult result = fit(train, grid, args.variant, args.solver, have_test ? &test : nullptr,
                         dict.size());

  ModelFile model{1, result.coeffs, dict, {}};
  model.metadata["kind"] = "fit";
  model.metadata["seed"] = std::to_string(args.solver.seed);
  model.metadata["eta"] = format_double(args.solver.eta);
  model.metadata["minibatch"] = std::to_string(args.solver.minibatch);
  model.metadata["epochs"] = std::to_string(args.solver.epochs);
  model.metadata["warmup_epochs"] = std::to_string(args.solver.warmup_epochs);
  model.metadata["full_grad_every"] = std::to_string(args.solver.full_grad_every);
  model.metadata["adagrad"] = args.solver.adagrad ? "true" : "false";
  model.metadata["tol"] = format_double(args.solver.tol);
  model.metadata["train"] = args.train_observations;
  model.metadata["passes"] = std::to_string(result.passes);
  model.metadata["converged"] = result.converged ? "true" : "false";
  model.metadata["train_objective"] = format_double(result.objective_trace.back());
  if (!result.test_nll_trace.empty())
    model.metadata["test_nll"] = format_double(result.test_nll_trace.back());
  save_model(args.model_out, model);

  const std::string trace_path =
      args.trace_out.empty() ? args.model_out + ".trace.csv" : args.trace_out;
  {
    std::ofstream trace(trace_path);
    if (!trace) throw std::runtime_error("cannot write " + trace_path);
    trace << "pass,train_objective,train_nll,test_nll\n";
    for (std::size_t k = 0; k < result.objective_trace.size(); ++k) {
      trace << k << ',' << format_double(result.objective_trace[k]) << ','
            << format_double(result.train_nll_trace[k]) << ',';
      if (k < result.test_nll_trace.size()) trace << format_double(result.test_nll_trace[k]);
      trace << '\n';
    }
  }

  std::printf("fit: %d passes%s, train objective %.6g", result.passes,
              result.converged ? " (converged)" : "", result.objective_trace.back());
  if (!result.test_nll_trace.empty())
    std::printf(", test NLL %.6g", result.test_nll_trace.back());
  std::printf("\nwrote %s and %s\n", args.model_out.c_str(), trace_path.c_str());
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
  ModelFile model = load_model(args.model);
  LoadedDataset data = load_dataset(args.observations, args.features, model.dict);

  double nll = evaluate(model.coeffs, data.observations);
  std::size_t breakpoints = count_active_breakpoints(model.coeffs, args.breakpoint_tol);

  std::printf("sites:              %zu\n", data.observations.size());
  std::printf("mean NLL:           %.6f\n", nll);
  std::printf("active breakpoints: %zu (tol %g)\n", breakpoints, args.breakpoint_tol);
  std::printf("per-feature max coefficient:\n");
  for (std::size_t j = 0; j < model.dict.size(); ++j) {
    const auto& vals = model.coeffs.w[j].values();
    double sup = *std::max_element(vals.begin(), vals.end());
    std::printf("  %-24s %.6g\n", model.dict.names[j].c_str(), sup);
  }
  const auto& w0 = model.coeffs.w0.values();
  std::printf("  %-24s %.6g\n", "(baseline)", *std::max_element(w0.begin(), w0.end()));
  return 0;
}

int cmd_export_curves(const ExportCurvesArgs& args) {
  ModelFile model = load_model(args.model);
  std::vector<std::pair<std::string, const StepFunction*>> selected;
  if (args.features.empty()) {
    if (args.include_baseline) selected.emplace_back("(baseline)", &model.coeffs.w0);
    for (std::size_t j = 0; j < model.dict.size(); ++j)
      selected.emplace_back(model.dict.names[j], &model.coeffs.w[j]);
  } else {
    for (const auto& name : args.features) {
      if (name == "(baseline)") {
        selected.emplace_back(name, &model.coeffs.w0);
        continue;
      }
      int j = model.dict.index_of(name);
      if (j < 0) {
        std::string available;
        for (const auto& n : model.dict.names) available += " " + n;
        throw std::runtime_error("unknown feature '" + name + "'; available:" + available +
                                 " (baseline)");
      }
      selected.emplace_back(name, &model.coeffs.w[static_cast<std::size_t>(j) - 1]);
    }
  }

  std::ofstream out(args.out);
  if (!out) throw std::runtime_error("cannot write " + args.out);
  out << "feature,knot_time,coefficient\n";
  const auto& times = model.coeffs.grid()->times();
  for (const auto& [name, fn] : selected) {
    const auto& vals = fn->values();
    for (std::size_t l = 0; l < vals.size(); ++l) {
      if (l == 0 || vals[l] != vals[l - 1])
        out << name << ',' << format_double(times[l]) << ',' << format_double(vals[l]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + args.out);
  std::printf("wrote %s (%zu curves)\n", args.out.c_str(), selected.size());
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Time-varying additive hazard regression with total-variation penalties"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic attack-campaign dataset");
  simulate->add_option("--sites", sim.config.n_sites, "Number of sites");
  simulate->add_option("--features", sim.config.n_features, "Number of features");
  simulate->add_option("--exploits", sim.config.n_exploits, "Number of true exploit features");
  simulate->add_option("--horizon", sim.config.horizon, "Observation horizon");
  simulate->add_flag("--monotone-truth", sim.config.monotone_truth,
                     "Non-decreasing true hazard rates");
  simulate->add_option("--max-campaigns", sim.config.max_campaigns_per_exploit,
                       "Max campaigns per exploit");
  simulate->add_option("--hazard-lo", sim.config.hazard_lo, "Campaign rate lower bound");
  simulate->add_option("--hazard-hi", sim.config.hazard_hi, "Campaign rate upper bound");
  simulate->add_option("--baseline-rate", sim.config.baseline_rate,
                       "Constant true baseline hazard");
  simulate->add_option("--checkpoint-rate", sim.config.checkpoint_rate,
                       "Mean checking points per site");
  simulate->add_option("--feature-prob", sim.config.feature_prob,
                       "Per-site feature activation probability");
  simulate->add_option("--seed", sim.config.seed, "Random seed");
  simulate->add_option("--site-stream", sim.site_stream,
                       "Site substream (same truth, fresh sites; use for test draws)");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");
  simulate->add_option("--prefix", sim.prefix, "Output file prefix");

  FitArgs fitargs;
  std::string penalty = "none";
  auto* fitcmd = app.add_subcommand("fit", "Fit a model on censored observations");
  fitcmd->add_option("--train", fitargs.train_observations, "Training observations CSV")
      ->required();
  fitcmd->add_option("--train-features", fitargs.train_features, "Training feature events CSV");
  fitcmd->add_option("--test", fitargs.test_observations, "Test observations CSV");
  fitcmd->add_option("--test-features", fitargs.test_features, "Test feature events CSV");
  fitcmd->add_option("--out", fitargs.model_out, "Model output path");
  fitcmd->add_option("--trace", fitargs.trace_out, "Objective trace output path");
  fitcmd->add_option("--horizon", fitargs.horizon, "Observation horizon (0 = infer)");
  fitcmd->add_option("--penalty", penalty, "Penalty: none, tv or log");
  fitcmd->add_flag("--monotone", fitargs.variant.monotone, "Monotone model");
  fitcmd->add_option("--gamma", fitargs.variant.gamma, "Penalty weight");
  fitcmd->add_option("--epsilon", fitargs.variant.epsilon, "Log-penalty offset");
  fitcmd->add_option("--eta", fitargs.solver.eta, "Learning rate (0 = default guess)");
  fitcmd->add_option("--minibatch", fitargs.solver.minibatch, "Minibatch size");
  fitcmd->add_option("--epochs", fitargs.solver.epochs, "SVRG data passes");
  fitcmd->add_option("--warmup-epochs", fitargs.solver.warmup_epochs, "Prox-SGD warmup passes");
  fitcmd->add_option("--full-grad-every", fitargs.solver.full_grad_every,
                     "Passes between full-gradient refreshes");
  fitcmd->add_flag("--adagrad,!--no-adagrad", fitargs.solver.adagrad,
                   "Adagrad diagonal preconditioning");
  fitcmd->add_option("--adagrad-eps", fitargs.solver.adagrad_eps, "Adagrad denominator offset");
  fitcmd->add_option("--tol", fitargs.solver.tol, "Relative objective-change stop (0 = off)");
  fitcmd->add_option("--seed", fitargs.solver.seed, "Random seed");

  EvaluateArgs evalargs;
  auto* evalcmd = app.add_subcommand("evaluate", "Evaluate a saved model on a dataset");
  evalcmd->add_option("--model", evalargs.model, "Model file")->required();
  evalcmd->add_option("--data", evalargs.observations, "Observations CSV")->required();
  evalcmd->add_option("--data-features", evalargs.features, "Feature events CSV");
  evalcmd->add_option("--breakpoint-tol", evalargs.breakpoint_tol,
                      "Active-breakpoint threshold");

  ExportCurvesArgs exportargs;
  auto* exportcmd =
      app.add_subcommand("export-curves", "Export fitted hazard step curves for plotting");
  exportcmd->add_option("--model", exportargs.model, "Model file")->required();
  exportcmd->add_option("--out", exportargs.out, "Output CSV");
  exportcmd->add_option("--feature", exportargs.features,
                        "Feature name to export (repeatable; default: all)");
  exportcmd->add_flag("--baseline,!--no-baseline", exportargs.include_baseline,
                      "Include the baseline when exporting all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (fitcmd->parsed()) {
      fitargs.variant.penalty = penalty_from_string(penalty);
      return cmd_fit(fitargs);
    }
    if (evalcmd->parsed()) return cmd_evaluate(evalargs);
    if (exportcmd->parsed()) return cmd_export_curves(exportargs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace hazreg
