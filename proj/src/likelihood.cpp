#include "hazreg/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hazreg/penalties.hpp"

namespace hazreg {

namespace {

constexpr double kBracketFloor = 1e-12;

// Accumulates int_{segment l ∩ [win_lo, win_hi]} x_j(s) ds into entries,
// scaled by `scale`, for one feature track (or the implicit baseline).
void accumulate_window(const KnotGrid& grid, int j,
                       const std::vector<std::pair<double, double>>& pieces, double win_lo,
                       double win_hi, double scale, PerSampleGradient& out) {
  if (scale == 0.0 || win_hi <= win_lo) return;
  const auto& times = grid.times();
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    double p_lo = std::max(pieces[k].first, win_lo);
    double p_hi = std::min(k + 1 < pieces.size() ? pieces[k + 1].first : win_hi, win_hi);
    double v = pieces[k].second;
    if (v == 0.0 || p_hi <= p_lo) continue;
    std::size_t l = grid.segment_index(p_lo);
    while (p_lo < p_hi) {
      double seg_end = (l + 1 < times.size()) ? times[l + 1] : p_hi;
      double cut = std::min(seg_end, p_hi);
      out.entries[{j, l}] += scale * v * (cut - p_lo);
      p_lo = cut;
      ++l;
    }
  }
}

}  // namespace

double neg_log_one_minus_exp_neg(double B) {
  if (!(B >= kBracketFloor)) return std::numeric_limits<double>::infinity();
  // Switch branch at log 2 for accuracy, the usual log1mexp split.
  if (B < 0.6931471805599453)
    return -std::log(-std::expm1(-B));
  return -std::log1p(-std::exp(-B));
}

double neg_log_likelihood(const CoefficientSet& coeffs, const Observation& obs) {
  if (obs.censor == CensorType::Right)
    return obs.weight * eval_cumulative_hazard(coeffs, obs, obs.t_hi);
  double lambda_lo = eval_cumulative_hazard(coeffs, obs, obs.t_lo);
  double B = eval_cumulative_hazard(coeffs, obs, obs.t_hi) - lambda_lo;
  return obs.weight * (lambda_lo + neg_log_one_minus_exp_neg(B));
}

PerSampleGradient gradient(const CoefficientSet& coeffs, const Observation& obs) {
  PerSampleGradient out;
  const KnotGrid& grid = *coeffs.grid();
  const std::vector<std::pair<double, double>> baseline{{0.0, 1.0}};

  double outer_hi = obs.censor == CensorType::Right ? obs.t_hi : obs.t_lo;
  double bracket_scale = 0.0;
  if (obs.censor == CensorType::Interval) {
    double B = eval_cumulative_hazard(coeffs, obs, obs.t_hi) -
               eval_cumulative_hazard(coeffs, obs, obs.t_lo);
    if (!(B >= kBracketFloor))
      throw std::runtime_error("site " + obs.site_id +
                               ": gradient undefined, bracket hazard mass is zero");
    bracket_scale = 1.0 / (1.0 - std::exp(B));
  }

  auto add_track = [&](int j, const std::vector<std::pair<double, double>>& pieces) {
    accumulate_window(grid, j, pieces, 0.0, outer_hi, obs.weight, out);
    if (obs.censor == CensorType::Interval)
      accumulate_window(grid, j, pieces, obs.t_lo, obs.t_hi, obs.weight * bracket_scale, out);
  };

  add_track(0, baseline);
  for (const auto& track : obs.tracks) {
    if (track.feature_id > static_cast<int>(coeffs.dim()))
      throw std::invalid_argument("site " + obs.site_id + ": feature id " +
                                  std::to_string(track.feature_id) +
                                  " exceeds model dimension");
    add_track(track.feature_id, track.events);
  }
  return out;
}

double penalty_value(const std::vector<double>& values, const ModelVariant& variant) {
  switch (variant.penalty) {
    case Penalty::None: return 0.0;
    case Penalty::TV: return tv_discrete(values);
    case Penalty::Log: return tv_log_discrete(values, variant.epsilon);
  }
  throw std::logic_error("bad penalty enum");
}

double dataset_objective(const CoefficientSet& coeffs, const std::vector<Observation>& data,
                         const ModelVariant& variant) {
  double acc = 0.0;
  for (const auto& obs : data) acc += neg_log_likelihood(coeffs, obs);
  if (variant.penalty != Penalty::None && variant.gamma != 0.0) {
    for (std::size_t j = 0; j <= coeffs.dim(); ++j)
      acc += variant.gamma * penalty_value(coeffs.coefficient(j).values(), variant);
  }
  return acc;
}

}  // namespace hazreg
