#include "hazreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace hazreg {

Penalty penalty_from_string(const std::string& s) {
  if (s == "none") return Penalty::None;
  if (s == "tv") return Penalty::TV;
  if (s == "log") return Penalty::Log;
  throw std::invalid_argument("unknown penalty '" + s + "' (expected none, tv or log)");
}

std::string to_string(Penalty p) {
  switch (p) {
    case Penalty::None: return "none";
    case Penalty::TV: return "tv";
    case Penalty::Log: return "log";
  }
  throw std::logic_error("bad penalty enum");
}

void ModelVariant::validate() const {
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  if (penalty == Penalty::Log && !(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon must be in (0, 1] for the log penalty");
}

KnotGrid::KnotGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw std::invalid_argument("knot grid needs at least {0, horizon}");
  if (times_.front() != 0.0) throw std::invalid_argument("knot grid must start at 0");
  for (std::size_t l = 1; l < times_.size(); ++l) {
    if (!(times_[l] > times_[l - 1]))
      throw std::invalid_argument("knot grid times must be strictly increasing");
  }
  if (!std::isfinite(times_.back())) throw std::invalid_argument("horizon must be finite");
}

std::size_t KnotGrid::segment_index(double t) const {
  if (!(t >= 0.0) || t > horizon())
    throw std::domain_error("time " + std::to_string(t) + " outside [0, horizon]");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

double KnotGrid::segment_length(std::size_t l) const {
  if (l + 1 >= times_.size()) return 0.0;
  return times_[l + 1] - times_[l];
}

bool KnotGrid::contains_time(double t) const {
  return std::binary_search(times_.begin(), times_.end(), t);
}

StepFunction::StepFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("step function needs a grid");
  if (values_.size() != grid_->size())
    throw std::invalid_argument("step function needs one value per knot");
}

StepFunction StepFunction::zero(GridPtr grid) { return constant(std::move(grid), 0.0); }

StepFunction StepFunction::constant(GridPtr grid, double value) {
  std::vector<double> v(grid->size(), value);
  return StepFunction(std::move(grid), std::move(v));
}

double StepFunction::operator()(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("step function evaluated at t < 0");
  if (t >= grid_->horizon()) return values_.back();
  return values_[grid_->segment_index(t)];
}

double StepFunction::integral_to(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("integral bound must be >= 0");
  const auto& times = grid_->times();
  double acc = 0.0;
  for (std::size_t l = 0; l + 1 < times.size(); ++l) {
    if (t <= times[l]) return acc;
    acc += values_[l] * (std::min(t, times[l + 1]) - times[l]);
  }
  if (t > times.back()) acc += values_.back() * (t - times.back());
  return acc;
}

double FeatureTrack::value_at(double t) const {
  double v = 0.0;
  for (const auto& [time, value] : events) {
    if (time > t) break;
    v = value;
  }
  return v;
}

void FeatureTrack::validate(const std::string& site_id) const {
  if (feature_id < 1)
    throw std::invalid_argument("site " + site_id + ": feature ids are 1-based");
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (!(events[k].second >= 0.0))
      throw std::invalid_argument("site " + site_id + ": feature values must be >= 0");
    if (k > 0 && !(events[k].first > events[k - 1].first))
      throw std::invalid_argument("site " + site_id +
                                  ": feature event times must be strictly increasing");
  }
}

Observation Observation::interval_censored(std::string site, double lo, double hi,
                                           double weight) {
  Observation o;
  o.site_id = std::move(site);
  o.censor = CensorType::Interval;
  o.t_lo = lo;
  o.t_hi = hi;
  o.weight = weight;
  o.validate();
  return o;
}

Observation Observation::right_censored(std::string site, double t, double weight) {
  Observation o;
  o.site_id = std::move(site);
  o.censor = CensorType::Right;
  o.t_hi = t;
  o.weight = weight;
  o.validate();
  return o;
}

Observation Observation::exact_event(std::string site, double t, double horizon,
                                     double weight) {
  const double shim = 1e-6 * horizon;
  double hi = std::min(t + shim, horizon);
  double lo = (hi - shim >= 0.0) ? hi - shim : 0.0;
  return interval_censored(std::move(site), lo, hi, weight);
}

void Observation::validate() const {
  if (!(weight > 0.0))
    throw std::invalid_argument("site " + site_id + ": weight must be > 0");
  if (censor == CensorType::Interval) {
    if (!(t_lo >= 0.0 && t_lo < t_hi))
      throw std::invalid_argument("site " + site_id +
                                  ": interval bracket needs 0 <= t_lo < t_hi");
  } else {
    if (!(t_hi > 0.0))
      throw std::invalid_argument("site " + site_id + ": censoring time must be > 0");
  }
  for (const auto& track : tracks) track.validate(site_id);
}

CoefficientSet CoefficientSet::zeros(GridPtr grid, std::size_t d, ModelVariant variant) {
  CoefficientSet c{StepFunction::zero(grid), {}, variant};
  c.w.reserve(d);
  for (std::size_t j = 0; j < d; ++j) c.w.push_back(StepFunction::zero(grid));
  return c;
}

void CoefficientSet::validate() const {
  variant.validate();
  const GridPtr& g = grid();
  for (std::size_t j = 0; j <= dim(); ++j) {
    const StepFunction& f = coefficient(j);
    if (f.grid() != g)
      throw std::invalid_argument("all coefficients must share one knot grid");
    double prev = 0.0;
    for (std::size_t l = 0; l < f.values().size(); ++l) {
      double v = f.values()[l];
      if (!(v >= 0.0))
        throw std::invalid_argument("coefficient " + std::to_string(j) +
                                    " violates nonnegativity at knot " + std::to_string(l));
      // The monotone constraint applies to feature coefficients, not w0.
      if (variant.monotone && j > 0 && l > 0 && v < prev)
        throw std::invalid_argument("coefficient " + std::to_string(j) +
                                    " violates monotonicity at knot " + std::to_string(l));
      prev = v;
    }
  }
}

KnotGrid build_knot_grid(const std::vector<Observation>& observations, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  std::set<double> pts{0.0, horizon};
  auto add = [&](double t, const std::string& site) {
    if (!(t >= 0.0) || t > horizon)
      throw std::invalid_argument("site " + site + ": time " + std::to_string(t) +
                                  " outside [0, horizon]");
    pts.insert(t);
  };
  for (const auto& obs : observations) {
    if (obs.censor == CensorType::Interval) add(obs.t_lo, obs.site_id);
    add(obs.t_hi, obs.site_id);
    for (const auto& track : obs.tracks)
      for (const auto& [t, v] : track.events) add(t, obs.site_id);
  }
  return KnotGrid(std::vector<double>(pts.begin(), pts.end()));
}

double eval_hazard(const CoefficientSet& coeffs, const Observation& obs, double t) {
  if (!(t >= 0.0) || t > coeffs.grid()->horizon())
    throw std::domain_error("hazard evaluated outside [0, horizon]");
  double h = coeffs.w0(t);
  for (const auto& track : obs.tracks) {
    if (track.feature_id > static_cast<int>(coeffs.dim()))
      throw std::invalid_argument("site " + obs.site_id + ": feature id " +
                                  std::to_string(track.feature_id) +
                                  " exceeds model dimension");
    h += track.value_at(t) * coeffs.w[track.feature_id - 1](t);
  }
  return h;
}

double eval_cumulative_hazard(const CoefficientSet& coeffs, const Observation& obs,
                              double t) {
  if (!(t >= 0.0) || t > coeffs.grid()->horizon())
    throw std::domain_error("cumulative hazard evaluated outside [0, horizon]");
  double acc = coeffs.w0.integral_to(t);
  for (const auto& track : obs.tracks) {
    if (track.feature_id > static_cast<int>(coeffs.dim()))
      throw std::invalid_argument("site " + obs.site_id + ": feature id " +
                                  std::to_string(track.feature_id) +
                                  " exceeds model dimension");
    const StepFunction& wj = coeffs.w[track.feature_id - 1];
    // x_j is constant between its own events, so the product integrates as
    // sum over track pieces of value * int w_j.
    for (std::size_t k = 0; k < track.events.size(); ++k) {
      double start = std::min(track.events[k].first, t);
      double end = (k + 1 < track.events.size()) ? std::min(track.events[k + 1].first, t) : t;
      if (end <= start) break;
      double v = track.events[k].second;
      if (v != 0.0) acc += v * (wj.integral_to(end) - wj.integral_to(start));
    }
  }
  return acc;
}

}  // namespace hazreg
