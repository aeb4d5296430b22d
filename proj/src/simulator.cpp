#include "hazreg/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace hazreg {

namespace {

constexpr std::uint64_t kTruthSalt = 0x7472757468ULL;  // truth stream
constexpr std::uint64_t kSiteSalt = 0x73697465ULL;     // site streams

std::string site_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%05d", index);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  if (n_sites < 0) throw std::invalid_argument("n_sites must be >= 0");
  if (n_features < 0) throw std::invalid_argument("n_features must be >= 0");
  if (n_exploits < 0 || n_exploits > n_features)
    throw std::invalid_argument("need 0 <= n_exploits <= n_features");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  if (max_campaigns_per_exploit < 1)
    throw std::invalid_argument("max_campaigns_per_exploit must be >= 1");
  if (!(hazard_lo > 0.0 && hazard_hi >= hazard_lo))
    throw std::invalid_argument("hazard range must satisfy 0 < lo <= hi");
  if (baseline_rate < 0.0) throw std::invalid_argument("baseline_rate must be >= 0");
  if (checkpoint_rate < 0.0) throw std::invalid_argument("checkpoint_rate must be >= 0");
  if (!(feature_prob >= 0.0 && feature_prob <= 1.0))
    throw std::invalid_argument("feature_prob must be in [0, 1]");
}

GroundTruth generate_truth(const SimConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::stream(cfg.seed, kTruthSalt, 0);

  struct Campaigns {
    std::vector<double> starts;
    std::vector<double> rates;
  };
  std::vector<Campaigns> exploits(cfg.n_exploits);
  std::set<double> knots{0.0, cfg.horizon};
  for (auto& ex : exploits) {
    int k = rng.uniform_int(1, cfg.max_campaigns_per_exploit);
    for (int c = 0; c < k; ++c) {
      ex.starts.push_back(rng.uniform(0.0, cfg.horizon));
      ex.rates.push_back(rng.uniform(cfg.hazard_lo, cfg.hazard_hi));
    }
    std::sort(ex.starts.begin(), ex.starts.end());
    if (cfg.monotone_truth) std::sort(ex.rates.begin(), ex.rates.end());
    for (double s : ex.starts) knots.insert(s);
  }

  auto grid = std::make_shared<const KnotGrid>(std::vector<double>(knots.begin(), knots.end()));
  ModelVariant variant{Penalty::None, cfg.monotone_truth, 0.0, 1.0};
  CoefficientSet coeffs =
      CoefficientSet::zeros(grid, static_cast<std::size_t>(cfg.n_features), variant);

  GroundTruth truth{std::move(coeffs), {}};
  if (cfg.baseline_rate > 0.0)
    truth.coeffs.w0 = StepFunction::constant(grid, cfg.baseline_rate);
  const auto& times = grid->times();
  for (int e = 0; e < cfg.n_exploits; ++e) {
    truth.exploit_ids.push_back(e + 1);
    auto& vals = truth.coeffs.w[e].values();
    const Campaigns& ex = exploits[e];
    std::size_t active = 0;  // campaigns started so far
    for (std::size_t l = 0; l < times.size(); ++l) {
      while (active < ex.starts.size() && ex.starts[active] <= times[l]) ++active;
      vals[l] = active == 0 ? 0.0 : ex.rates[active - 1];
    }
  }
  truth.coeffs.validate();
  return truth;
}

std::optional<double> sample_hack_time(const GroundTruth& truth,
                                       const std::vector<FeatureTrack>& site_features,
                                       Rng& rng) {
  const double horizon = truth.coeffs.grid()->horizon();
  std::set<double> breaks(truth.coeffs.grid()->times().begin(),
                          truth.coeffs.grid()->times().end());
  for (const auto& track : site_features)
    for (const auto& [t, v] : track.events)
      if (t < horizon) breaks.insert(t);

  Observation probe;  // carries the tracks for eval_hazard
  probe.site_id = "probe";
  probe.censor = CensorType::Right;
  probe.t_hi = horizon;
  probe.tracks = site_features;

  std::vector<double> pts(breaks.begin(), breaks.end());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double rate = eval_hazard(truth.coeffs, probe, pts[k]);
    if (rate <= 0.0) continue;
    double t = pts[k] + rng.exponential(rate);
    if (t < pts[k + 1]) return t;
  }
  return std::nullopt;
}

CensorRecord censor(std::optional<double> hack_time, const std::vector<double>& checkpoints,
                    double horizon) {
  if (!hack_time) return CensorRecord{CensorType::Right, 0.0, horizon};
  double t = *hack_time;
  double lo = 0.0, hi = horizon;
  for (double cp : checkpoints) {
    if (cp <= t)
      lo = std::max(lo, cp);
    else
      hi = std::min(hi, cp);
  }
  return CensorRecord{CensorType::Interval, lo, hi};
}

std::vector<Observation> generate_observations(const GroundTruth& truth, const SimConfig& cfg,
                                               std::uint64_t site_stream,
                                               std::vector<std::optional<double>>* hack_times) {
  cfg.validate();
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(cfg.n_sites));
  if (hack_times) hack_times->clear();

  for (int s = 0; s < cfg.n_sites; ++s) {
    Rng rng = Rng::stream(cfg.seed, kSiteSalt + site_stream,
                          static_cast<std::uint64_t>(s) + 1);
    std::vector<FeatureTrack> tracks;
    for (int j = 1; j <= cfg.n_features; ++j) {
      if (rng.bernoulli(cfg.feature_prob))
        tracks.push_back(FeatureTrack{j, {{0.0, 1.0}}});
    }

    std::optional<double> hack = sample_hack_time(truth, tracks, rng);

    int n_cp = cfg.checkpoint_rate > 0.0 ? rng.poisson(cfg.checkpoint_rate) : 0;
    std::vector<double> cps(static_cast<std::size_t>(n_cp));
    for (double& cp : cps) cp = rng.uniform(0.0, cfg.horizon);
    std::sort(cps.begin(), cps.end());

    CensorRecord rec = censor(hack, cps, cfg.horizon);
    Observation obs = rec.type == CensorType::Interval
                          ? Observation::interval_censored(site_name(s), rec.t_lo, rec.t_hi)
                          : Observation::right_censored(site_name(s), rec.t_hi);
    obs.tracks = std::move(tracks);
    out.push_back(std::move(obs));
    if (hack_times) hack_times->push_back(hack);
  }
  return out;
}

std::pair<std::vector<Observation>, GroundTruth> generate_dataset(const SimConfig& cfg) {
  GroundTruth truth = generate_truth(cfg);
  std::vector<Observation> obs = generate_observations(truth, cfg);
  return {std::move(obs), std::move(truth)};
}

}  // namespace hazreg
