#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hazreg/likelihood.hpp"
#include "hazreg/simulator.hpp"
#include "oracles.hpp"

using namespace hazreg;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.n_sites = 50;
  cfg.n_features = 6;
  cfg.n_exploits = 2;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("generate_truth: no exploits means an all-zero truth") {
  SimConfig cfg = small_config();
  cfg.n_exploits = 0;
  GroundTruth truth = generate_truth(cfg);
  CHECK(truth.exploit_ids.empty());
  for (std::size_t j = 0; j <= truth.coeffs.dim(); ++j)
    for (double v : truth.coeffs.coefficient(j).values()) CHECK(v == 0.0);
}

TEST_CASE("generate_truth: monotone truths are non-decreasing") {
  SimConfig cfg = small_config();
  cfg.monotone_truth = true;
  cfg.max_campaigns_per_exploit = 4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    GroundTruth truth = generate_truth(cfg);
    for (int id : truth.exploit_ids) {
      const auto& vals = truth.coeffs.w[static_cast<std::size_t>(id) - 1].values();
      for (std::size_t l = 1; l < vals.size(); ++l) CHECK(vals[l] >= vals[l - 1]);
    }
  }
}

TEST_CASE("generate_truth: default protocol has exactly 4 nonzero features out of 40") {
  SimConfig cfg;  // defaults: 40 features, 4 exploits
  cfg.seed = 3;
  GroundTruth truth = generate_truth(cfg);
  std::size_t nonzero = 0;
  for (const auto& wj : truth.coeffs.w) {
    double sup = *std::max_element(wj.values().begin(), wj.values().end());
    if (sup > 0.0) ++nonzero;
  }
  CHECK(nonzero == 4);
  CHECK(truth.exploit_ids.size() == 4);
}

TEST_CASE("sample_hack_time: zero hazard never produces an event") {
  SimConfig cfg = small_config();
  cfg.n_exploits = 0;
  GroundTruth truth = generate_truth(cfg);
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep)
    CHECK(!sample_hack_time(truth, {{1, {{0.0, 1.0}}}}, rng).has_value());
}

TEST_CASE("sample_hack_time: constant hazard matches the exponential mean") {
  const double lambda = 0.7;
  SimConfig cfg;
  cfg.n_features = 0;
  cfg.n_exploits = 0;
  cfg.horizon = 1e9;  // effectively infinite
  GroundTruth truth = generate_truth(cfg);
  truth.coeffs.w0 = StepFunction::constant(truth.coeffs.grid(), lambda);

  Rng rng(123);
  double sum = 0.0;
  const int n = 100000;
  for (int rep = 0; rep < n; ++rep) {
    auto t = sample_hack_time(truth, {}, rng);
    REQUIRE(t.has_value());
    sum += *t;
  }
  double mean = sum / n;
  CHECK(std::abs(mean - 1.0 / lambda) < 0.02 / lambda);
}

TEST_CASE("sample_hack_time: delayed hazard passes a KS test against Exp") {
  const double s = 2.5, lambda = 0.9;
  auto grid = std::make_shared<const KnotGrid>(std::vector<double>{0.0, s, 1e9});
  CoefficientSet coeffs = CoefficientSet::zeros(grid, 0, ModelVariant{});
  coeffs.w0.values() = {0.0, lambda, lambda};
  GroundTruth truth{std::move(coeffs), {}};

  Rng rng(77);
  std::vector<double> shifted;
  for (int rep = 0; rep < 5000; ++rep) {
    auto t = sample_hack_time(truth, {}, rng);
    REQUIRE(t.has_value());
    REQUIRE(*t > s);
    shifted.push_back(*t - s);
  }
  double d = oracle::ks_statistic(shifted,
                                  [&](double x) { return 1.0 - std::exp(-lambda * x); });
  // alpha = 0.01 critical value.
  CHECK(d < 1.6276 / std::sqrt(static_cast<double>(shifted.size())));
}

TEST_CASE("censor brackets the hack time with the nearest checkpoints") {
  CensorRecord a = censor(3.7, {2.0, 5.0}, 10.0);
  CHECK(a.type == CensorType::Interval);
  CHECK(a.t_lo == 2.0);
  CHECK(a.t_hi == 5.0);

  CensorRecord b = censor(std::nullopt, {2.0, 5.0}, 10.0);
  CHECK(b.type == CensorType::Right);
  CHECK(b.t_hi == 10.0);

  CensorRecord c = censor(1.0, {}, 10.0);
  CHECK(c.type == CensorType::Interval);
  CHECK(c.t_lo == 0.0);
  CHECK(c.t_hi == 10.0);
}

TEST_CASE("generate_dataset is deterministic in the seed") {
  SimConfig cfg = small_config();
  auto [obs1, truth1] = generate_dataset(cfg);
  auto [obs2, truth2] = generate_dataset(cfg);
  REQUIRE(obs1.size() == obs2.size());
  for (std::size_t i = 0; i < obs1.size(); ++i) {
    CHECK(obs1[i].site_id == obs2[i].site_id);
    CHECK(obs1[i].censor == obs2[i].censor);
    CHECK(obs1[i].t_lo == obs2[i].t_lo);
    CHECK(obs1[i].t_hi == obs2[i].t_hi);
    REQUIRE(obs1[i].tracks.size() == obs2[i].tracks.size());
    for (std::size_t k = 0; k < obs1[i].tracks.size(); ++k)
      CHECK(obs1[i].tracks[k].feature_id == obs2[i].tracks[k].feature_id);
  }
  // A different site stream keeps the truth but changes the draws.
  auto other = generate_observations(truth1, cfg, 1);
  bool any_differs = false;
  for (std::size_t i = 0; i < obs1.size(); ++i)
    if (other[i].censor != obs1[i].censor || other[i].t_hi != obs1[i].t_hi) any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("sites with no exploit features are right-censored") {
  SimConfig cfg = small_config();
  cfg.n_sites = 400;
  auto [obs, truth] = generate_dataset(cfg);
  for (const auto& o : obs) {
    bool has_exploit = false;
    for (const auto& track : o.tracks)
      for (int id : truth.exploit_ids)
        if (track.feature_id == id) has_exploit = true;
    if (!has_exploit) {
      CHECK(o.censor == CensorType::Right);
      CHECK(o.t_hi == cfg.horizon);
    }
  }
}

TEST_CASE("censor brackets always contain the true hack time") {
  SimConfig cfg = small_config();
  cfg.n_sites = 500;
  GroundTruth truth = generate_truth(cfg);
  std::vector<std::optional<double>> hacks;
  auto obs = generate_observations(truth, cfg, 0, &hacks);
  REQUIRE(hacks.size() == obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!hacks[i]) {
      CHECK(obs[i].censor == CensorType::Right);
      continue;
    }
    CHECK(obs[i].censor == CensorType::Interval);
    CHECK(obs[i].t_lo <= *hacks[i]);
    CHECK(*hacks[i] < obs[i].t_hi);
  }
}

TEST_CASE("empirical survival of homogeneous sites matches exp(-Lambda)") {
  // One exploit, every site carries it: all sites share the same hazard.
  SimConfig cfg;
  cfg.n_sites = 10000;
  cfg.n_features = 1;
  cfg.n_exploits = 1;
  cfg.feature_prob = 1.0;
  cfg.checkpoint_rate = 0.0;
  cfg.seed = 2718;
  GroundTruth truth = generate_truth(cfg);
  std::vector<std::optional<double>> hacks;
  generate_observations(truth, cfg, 0, &hacks);

  Observation probe = Observation::right_censored("probe", cfg.horizon);
  probe.tracks.push_back(FeatureTrack{1, {{0.0, 1.0}}});
  for (int k = 1; k <= 10; ++k) {
    double t = cfg.horizon * static_cast<double>(k) / 10.5;
    double survival = std::exp(-eval_cumulative_hazard(truth.coeffs, probe, t));
    double alive = 0.0;
    for (const auto& h : hacks)
      if (!h || *h > t) alive += 1.0;
    double fraction = alive / static_cast<double>(cfg.n_sites);
    double half_width =
        2.576 * std::sqrt(std::max(survival * (1.0 - survival), 1e-9) /
                          static_cast<double>(cfg.n_sites));
    CHECK(std::abs(fraction - survival) <= half_width);
  }
}

TEST_CASE("non-exploit features are independent of hack outcomes") {
  SimConfig cfg = small_config();
  cfg.n_sites = 4000;
  cfg.seed = 31415;
  auto [obs, truth] = generate_dataset(cfg);
  // Permutation test on the association between a non-exploit feature and
  // the hacked indicator.
  int feature = cfg.n_features;  // last feature is never an exploit
  std::vector<int> has(obs.size()), hacked(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    hacked[i] = obs[i].censor == CensorType::Interval ? 1 : 0;
    has[i] = 0;
    for (const auto& tr : obs[i].tracks)
      if (tr.feature_id == feature) has[i] = 1;
  }
  auto statistic = [&](const std::vector<int>& h) {
    double on_sum = 0, on_n = 0, off_sum = 0, off_n = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (h[i]) {
        on_sum += hacked[i];
        on_n += 1;
      } else {
        off_sum += hacked[i];
        off_n += 1;
      }
    }
    return std::abs(on_sum / std::max(on_n, 1.0) - off_sum / std::max(off_n, 1.0));
  };
  double observed = statistic(has);
  Rng rng(999);
  int exceed = 0;
  const int reps = 500;
  std::vector<int> shuffled = has;
  for (int rep = 0; rep < reps; ++rep) {
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(rng.uniform_int(
                                     0, static_cast<int>(i) - 1))]);
    if (statistic(shuffled) >= observed) ++exceed;
  }
  double p = static_cast<double>(exceed + 1) / static_cast<double>(reps + 1);
  CHECK(p > 0.01);
}
