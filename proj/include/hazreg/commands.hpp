#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazreg/io.hpp"
#include "hazreg/simulator.hpp"
#include "hazreg/solver.hpp"

namespace hazreg {

struct SimulateArgs {
  SimConfig config;
  std::uint64_t site_stream = 0;
  std::string out_dir = ".";
  std::string prefix;
};

struct FitArgs {
  std::string train_observations;
  std::string train_features;
  std::string test_observations;  // optional
  std::string test_features;      // optional
  std::string model_out = "model.json";
  std::string trace_out;          // default: model_out + ".trace.csv"
  double horizon = 0.0;           // 0 = infer from data (with a warning)
  ModelVariant variant;
  SolverConfig solver;
};

struct EvaluateArgs {
  std::string model;
  std::string observations;
  std::string features;
  double breakpoint_tol = 1e-6;
};

struct ExportCurvesArgs {
  std::string model;
  std::string out = "curves.csv";
  std::vector<std::string> features;  // empty = all features plus the baseline
  bool include_baseline = true;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_export_curves(const ExportCurvesArgs& args);

/// Full CLI entry point: parses argv into the structs above and dispatches.
/// Exit codes: 0 success, 2 usage error, 1 runtime error.
int run_cli(int argc, const char* const* argv);

}  // namespace hazreg
