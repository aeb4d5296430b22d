#include <doctest.h>

#include <cmath>
#include <random>

#include "hazreg/likelihood.hpp"
#include "hazreg/penalties.hpp"
#include "hazreg/simulator.hpp"
#include "hazreg/solver.hpp"

using namespace hazreg;

namespace {

GridPtr make_grid(std::vector<double> times) {
  return std::make_shared<const KnotGrid>(std::move(times));
}

std::vector<Observation> small_interval_dataset() {
  std::vector<Observation> data;
  Observation a = Observation::interval_censored("a", 1.0, 3.0);
  a.tracks.push_back(FeatureTrack{1, {{0.0, 1.0}}});
  Observation b = Observation::right_censored("b", 10.0);
  b.tracks.push_back(FeatureTrack{1, {{0.0, 1.0}}});
  b.tracks.push_back(FeatureTrack{2, {{2.0, 1.0}}});
  Observation c = Observation::interval_censored("c", 4.0, 7.0);
  c.tracks.push_back(FeatureTrack{2, {{0.0, 1.0}}});
  Observation d = Observation::right_censored("d", 10.0);
  data = {a, b, c, d};
  return data;
}

}  // namespace

TEST_CASE("pure survivors drive the objective to zero") {
  Observation s = Observation::right_censored("s", 5.0);
  s.tracks.push_back(FeatureTrack{1, {{0.0, 1.0}}});
  std::vector<Observation> data{s};
  auto grid = make_grid(build_knot_grid(data, 5.0).times());
  SolverConfig cfg;
  cfg.epochs = 5;
  cfg.warmup_epochs = 1;
  FitResult r = fit(data, grid, ModelVariant{}, cfg);
  CHECK(r.objective_trace.back() < 1e-6);
}

TEST_CASE("compiled full gradient matches per-sample gradient sums") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  const std::size_t d = 2, K = grid->size();

  detail::CompiledData cd = detail::compile_dataset(data, grid, d);
  detail::CoefMatrix w(d + 1, K);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (auto& x : w.a) x = unif(rng);

  detail::CoefMatrix mu;
  detail::full_gradient(cd, w, mu);

  CoefficientSet coeffs = CoefficientSet::zeros(grid, d, ModelVariant{});
  for (std::size_t j = 0; j <= d; ++j)
    for (std::size_t l = 0; l < K; ++l) coeffs.coefficient(j).values()[l] = w.at(j, l);
  detail::CoefMatrix expected(d + 1, K);
  for (const auto& obs : data)
    for (const auto& [key, value] : gradient(coeffs, obs).entries)
      expected.at(static_cast<std::size_t>(key.first), key.second) += value;

  for (std::size_t i = 0; i < mu.a.size(); ++i)
    CHECK(mu.a[i] == doctest::Approx(expected.a[i]).epsilon(1e-10));
}

TEST_CASE("objective on compiled data matches dataset_objective") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  const std::size_t d = 2, K = grid->size();
  ModelVariant tv{Penalty::TV, false, 0.6, 1.0};

  detail::CompiledData cd = detail::compile_dataset(data, grid, d);
  detail::CoefMatrix w(d + 1, K);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (auto& x : w.a) x = unif(rng);
  CoefficientSet coeffs = CoefficientSet::zeros(grid, d, tv);
  for (std::size_t j = 0; j <= d; ++j)
    for (std::size_t l = 0; l < K; ++l) coeffs.coefficient(j).values()[l] = w.at(j, l);

  CHECK(detail::objective(cd, w, tv) ==
        doctest::Approx(dataset_objective(coeffs, data, tv)).epsilon(1e-12));
}

TEST_CASE("full-batch SVRG collapses to deterministic proximal gradient descent") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  const std::size_t n = data.size(), K = grid->size(), d = 2;
  ModelVariant tv{Penalty::TV, false, 0.3, 1.0};

  SolverConfig cfg;
  cfg.eta = 0.05;
  cfg.minibatch = static_cast<int>(n);
  cfg.epochs = 3;
  cfg.warmup_epochs = 0;
  cfg.adagrad = false;
  FitResult r = fit(data, grid, tv, cfg);

  // Independent reference: plain prox gradient from the same start.
  std::size_t n_interval = 0;
  double exposure = 0.0;
  for (const auto& obs : data) {
    exposure += obs.t_hi;
    if (obs.censor == CensorType::Interval) ++n_interval;
  }
  CoefficientSet coeffs = CoefficientSet::zeros(grid, d, tv);
  for (auto& v : coeffs.w0.values()) v = static_cast<double>(n_interval) / exposure;

  for (int pass = 0; pass < 3; ++pass) {
    std::vector<std::vector<double>> dir(d + 1, std::vector<double>(K, 0.0));
    for (const auto& obs : data)
      for (const auto& [key, value] : gradient(coeffs, obs).entries)
        dir[static_cast<std::size_t>(key.first)][key.second] +=
            value / static_cast<double>(n);
    for (std::size_t j = 0; j <= d; ++j) {
      auto& vals = coeffs.coefficient(j).values();
      for (std::size_t l = 0; l < K; ++l) vals[l] -= cfg.eta * dir[j][l];
      vals = prox_full(vals, tv, cfg.eta * tv.gamma / static_cast<double>(n));
    }
  }
  for (std::size_t j = 0; j <= d; ++j)
    for (std::size_t l = 0; l < K; ++l)
      CHECK(r.coeffs.coefficient(j).values()[l] ==
            doctest::Approx(coeffs.coefficient(j).values()[l]).epsilon(1e-10));
}

TEST_CASE("identical seeds give bit-identical fits") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  ModelVariant log_mono{Penalty::Log, true, 0.2, 0.5};
  SolverConfig cfg;
  cfg.epochs = 6;
  cfg.warmup_epochs = 2;
  cfg.minibatch = 2;
  cfg.seed = 42;
  FitResult r1 = fit(data, grid, log_mono, cfg);
  FitResult r2 = fit(data, grid, log_mono, cfg);
  CHECK(r1.objective_trace == r2.objective_trace);
  CHECK(r1.passes == r2.passes);
  for (std::size_t j = 0; j <= r1.coeffs.dim(); ++j)
    CHECK(r1.coeffs.coefficient(j).values() == r2.coeffs.coefficient(j).values());

  SolverConfig other = cfg;
  other.seed = 43;
  FitResult r3 = fit(data, grid, log_mono, other);
  CHECK(r3.objective_trace != r1.objective_trace);
}

TEST_CASE("every variant yields feasible iterates") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  SolverConfig cfg;
  cfg.epochs = 4;
  cfg.warmup_epochs = 1;
  cfg.minibatch = 2;
  for (Penalty p : {Penalty::None, Penalty::TV, Penalty::Log}) {
    for (bool monotone : {false, true}) {
      ModelVariant variant{p, monotone, 0.4, 0.8};
      FitResult r = fit(data, grid, variant, cfg);
      CHECK_NOTHROW(r.coeffs.validate());
      CHECK(r.objective_trace.back() <= r.objective_trace.front());
    }
  }
}

TEST_CASE("gamma 0 TV fit equals the unpenalized fit") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  SolverConfig cfg;
  cfg.epochs = 5;
  cfg.minibatch = 2;
  cfg.seed = 9;
  FitResult tv0 = fit(data, grid, ModelVariant{Penalty::TV, false, 0.0, 1.0}, cfg);
  FitResult none = fit(data, grid, ModelVariant{Penalty::None, false, 0.0, 1.0}, cfg);
  CHECK(tv0.objective_trace == none.objective_trace);
  for (std::size_t j = 0; j <= tv0.coeffs.dim(); ++j)
    CHECK(tv0.coeffs.coefficient(j).values() == none.coeffs.coefficient(j).values());
}

TEST_CASE("divergence detector aborts with a diagnostic") {
  std::vector<Observation> data = small_interval_dataset();
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  SolverConfig cfg;
  cfg.eta = 1e9;
  cfg.adagrad = false;
  cfg.warmup_epochs = 0;
  cfg.epochs = 3;
  CHECK_THROWS_WITH_AS(fit(data, grid, ModelVariant{}, cfg), doctest::Contains("diverged"),
                       std::runtime_error);
}

TEST_CASE("evaluate basics") {
  auto grid = make_grid({0.0, 2.0, 10.0});
  CoefficientSet zero = CoefficientSet::zeros(grid, 1, ModelVariant{});
  std::vector<Observation> survivors{Observation::right_censored("a", 10.0),
                                     Observation::right_censored("b", 2.0)};
  CHECK(evaluate(zero, survivors) == 0.0);

  // Equals dataset_objective with gamma 0 divided by the total weight.
  CoefficientSet coeffs = zero;
  coeffs.w0.values() = {0.4, 0.2, 0.2};
  std::vector<Observation> data{Observation::interval_censored("a", 0.0, 2.0, 3.0),
                                Observation::right_censored("b", 10.0, 2.0)};
  ModelVariant gamma0{Penalty::TV, false, 0.0, 1.0};
  CHECK(evaluate(coeffs, data) ==
        doctest::Approx(dataset_objective(coeffs, data, gamma0) / 5.0).epsilon(1e-12));
}

TEST_CASE("evaluate agrees with neg_log_likelihood off the fit grid") {
  // Censor times that are not knots of the model grid.
  auto grid = make_grid({0.0, 3.0, 6.0, 10.0});
  CoefficientSet coeffs = CoefficientSet::zeros(grid, 1, ModelVariant{});
  coeffs.w0.values() = {0.3, 0.1, 0.2, 0.2};
  coeffs.w[0].values() = {0.0, 0.4, 0.1, 0.1};
  Observation obs = Observation::interval_censored("s", 2.5, 7.25);
  obs.tracks.push_back(FeatureTrack{1, {{1.1, 1.0}, {6.5, 0.5}}});
  double direct = neg_log_likelihood(coeffs, obs);
  CHECK(evaluate(coeffs, {obs}) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("count_active_breakpoints") {
  auto grid = make_grid({0.0, 2.0, 5.0, 10.0});
  CoefficientSet coeffs = CoefficientSet::zeros(grid, 1, ModelVariant{});
  CHECK(count_active_breakpoints(coeffs, 1e-6) == 0);
  coeffs.w[0].values() = {0.0, 0.3, 0.3, 0.3};
  CHECK(count_active_breakpoints(coeffs, 1e-6) == 1);
  coeffs.w0.values() = {0.1, 0.1, 0.1 + 5e-7, 0.1};
  CHECK(count_active_breakpoints(coeffs, 1e-6) == 1);
  CHECK(count_active_breakpoints(coeffs, 0.0) == 3);
}

TEST_CASE("penalized fits have no more active breakpoints than unpenalized") {
  SimConfig sim;
  sim.n_sites = 150;
  sim.n_features = 8;
  sim.n_exploits = 2;
  sim.seed = 77;
  auto [data, truth] = generate_dataset(sim);
  auto grid = make_grid(build_knot_grid(data, sim.horizon).times());
  SolverConfig cfg;
  cfg.epochs = 12;
  cfg.warmup_epochs = 2;
  cfg.seed = 1;
  FitResult none = fit(data, grid, ModelVariant{Penalty::None, false, 0.0, 1.0}, cfg);
  FitResult l1 = fit(data, grid, ModelVariant{Penalty::TV, false, 2.0, 1.0}, cfg);
  CHECK(count_active_breakpoints(l1.coeffs, 1e-6) <
        count_active_breakpoints(none.coeffs, 1e-6));
}

TEST_CASE("test NLL trace is produced when test data is supplied") {
  std::vector<Observation> data = small_interval_dataset();
  std::vector<Observation> test{Observation::right_censored("t", 10.0)};
  auto grid = make_grid(build_knot_grid(data, 10.0).times());
  SolverConfig cfg;
  cfg.epochs = 3;
  cfg.warmup_epochs = 1;
  FitResult r = fit(data, grid, ModelVariant{}, cfg, &test);
  CHECK(r.test_nll_trace.size() == r.objective_trace.size());
  CHECK(r.train_nll_trace.size() == r.objective_trace.size());
}
