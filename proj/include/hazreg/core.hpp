#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hazreg {

enum class Penalty { None, TV, Log };

Penalty penalty_from_string(const std::string& s);
std::string to_string(Penalty p);

/// Which model is being fit: penalty type, monotone constraint and the
/// penalty parameters gamma (weight) and epsilon (log-penalty offset).
struct ModelVariant {
  Penalty penalty = Penalty::None;
  bool monotone = false;
  double gamma = 0.0;
  double epsilon = 1.0;

  void validate() const;
};

/// Sorted global time points shared by all coefficient step functions.
/// times[0] == 0 and times.back() == horizon; strictly increasing.
class KnotGrid {
 public:
  explicit KnotGrid(std::vector<double> times);

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  double horizon() const noexcept { return times_.back(); }

  /// Largest l with times[l] <= t. Requires 0 <= t <= horizon.
  std::size_t segment_index(double t) const;

  /// Length of [times[l], times[l+1]); 0 for the final segment.
  double segment_length(std::size_t l) const;

  /// Exact membership test (binary search).
  bool contains_time(double t) const;

  bool operator==(const KnotGrid&) const = default;

 private:
  std::vector<double> times_;
};

using GridPtr = std::shared_ptr<const KnotGrid>;

/// Right-continuous piecewise-constant function on a knot grid.
/// values[l] applies on [times[l], times[l+1]) and values.back() on
/// [horizon, inf).
class StepFunction {
 public:
  StepFunction(GridPtr grid, std::vector<double> values);

  static StepFunction zero(GridPtr grid);
  static StepFunction constant(GridPtr grid, double value);

  const GridPtr& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  /// Mutable access is reserved for the single writer (the solver).
  std::vector<double>& values() noexcept { return values_; }

  /// Value at time t >= 0.
  double operator()(double t) const;

  /// Exact \int_0^t of the step function, t >= 0 (extends past the horizon
  /// with the final value).
  double integral_to(double t) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Sparse piecewise-constant feature trajectory: value 0 before the first
/// event, then the most recent event value.
struct FeatureTrack {
  int feature_id = 0;  // 1..d
  std::vector<std::pair<double, double>> events;  // (time, value), times strictly increasing

  double value_at(double t) const;
  void validate(const std::string& site_id) const;
};

enum class CensorType { Interval, Right };

/// One site's censoring record plus its feature tracks.
struct Observation {
  std::string site_id;
  CensorType censor = CensorType::Right;
  double t_lo = 0.0;  // bracket start; unused when right-censored
  double t_hi = 0.0;  // bracket end, or the right-censoring time
  double weight = 1.0;
  std::vector<FeatureTrack> tracks;

  static Observation interval_censored(std::string site, double lo, double hi,
                                       double weight = 1.0);
  static Observation right_censored(std::string site, double t, double weight = 1.0);
  /// Shim for an exactly observed event: a narrow interval of width
  /// 1e-6 * horizon around t, clipped to [0, horizon].
  static Observation exact_event(std::string site, double t, double horizon,
                                 double weight = 1.0);

  double end_time() const noexcept { return t_hi; }
  void validate() const;
};

/// All coefficient functions of one model: baseline w0 plus one step
/// function per feature, on a shared grid. The solver is the single writer;
/// read-only evaluation is safe from many threads.
struct CoefficientSet {
  StepFunction w0;
  std::vector<StepFunction> w;  // w[j-1] holds feature j
  ModelVariant variant;

  static CoefficientSet zeros(GridPtr grid, std::size_t d, ModelVariant variant);

  std::size_t dim() const noexcept { return w.size(); }
  const GridPtr& grid() const noexcept { return w0.grid(); }

  const StepFunction& coefficient(std::size_t j) const { return j == 0 ? w0 : w[j - 1]; }
  StepFunction& coefficient(std::size_t j) { return j == 0 ? w0 : w[j - 1]; }

  void validate() const;
};

/// Sorted, deduplicated union of {0, horizon}, all censoring bracket
/// endpoints and all feature change times.
KnotGrid build_knot_grid(const std::vector<Observation>& observations, double horizon);

/// Additive hazard w0(t) + sum_j x_j(t) w_j(t) for one site at time t.
double eval_hazard(const CoefficientSet& coeffs, const Observation& obs, double t);

/// Exact integral of the piecewise-constant hazard on [0, t].
double eval_cumulative_hazard(const CoefficientSet& coeffs, const Observation& obs,
                              double t);

}  // namespace hazreg
