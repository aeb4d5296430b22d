#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hazreg/core.hpp"
#include "hazreg/rng.hpp"

namespace hazreg {

struct SimConfig {
  int n_sites = 1000;
  int n_features = 40;
  int n_exploits = 4;
  double horizon = 10.0;
  bool monotone_truth = false;
  int max_campaigns_per_exploit = 3;
  double hazard_lo = 0.05;  // campaign rate range
  double hazard_hi = 1.0;
  double baseline_rate = 0.0;    // constant true w0 (0 = hazard only from exploits)
  double checkpoint_rate = 5.0;  // mean checking points per site
  double feature_prob = 0.5;     // per-site activation probability
  std::uint64_t seed = 0;

  void validate() const;
};

/// The true coefficient set behind a synthetic dataset: scripted attack
/// campaigns on the exploit features, zero everywhere else.
struct GroundTruth {
  CoefficientSet coeffs;
  std::vector<int> exploit_ids;
};

struct CensorRecord {
  CensorType type = CensorType::Right;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// Campaign change points uniform in [0, horizon], per-campaign rates uniform
/// in the hazard range (sorted ascending when the truth is monotone).
GroundTruth generate_truth(const SimConfig& cfg);

/// First event time of the inhomogeneous Poisson process with the site's
/// piecewise-constant additive hazard, by segment-wise exponential sampling.
/// nullopt when the site survives to the horizon.
std::optional<double> sample_hack_time(const GroundTruth& truth,
                                       const std::vector<FeatureTrack>& site_features,
                                       Rng& rng);

/// Bracket the hack time with the nearest checking points; 0 and the horizon
/// act as implicit outer checkpoints. No hack => right-censored at horizon.
CensorRecord censor(std::optional<double> hack_time, const std::vector<double>& checkpoints,
                    double horizon);

/// Full protocol draw: per-site feature assignment, exact hack time,
/// checking points, censored record. Deterministic given cfg.seed; the
/// site_stream salt varies the sites while keeping the same ground truth
/// (train/test pairs).
std::vector<Observation> generate_observations(const GroundTruth& truth, const SimConfig& cfg,
                                               std::uint64_t site_stream = 0,
                                               std::vector<std::optional<double>>* hack_times = nullptr);

std::pair<std::vector<Observation>, GroundTruth> generate_dataset(const SimConfig& cfg);

}  // namespace hazreg
