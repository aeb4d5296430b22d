#include "hazreg/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "hazreg/likelihood.hpp"
#include "hazreg/penalties.hpp"

namespace hazreg {

void SolverConfig::validate() const {
  if (eta < 0.0) throw std::invalid_argument("eta must be >= 0 (0 selects the default)");
  if (minibatch < 1) throw std::invalid_argument("minibatch must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (warmup_epochs < 0) throw std::invalid_argument("warmup_epochs must be >= 0");
  if (full_grad_every < 1) throw std::invalid_argument("full_grad_every must be >= 1");
  if (!(adagrad_eps > 0.0)) throw std::invalid_argument("adagrad_eps must be > 0");
  if (tol < 0.0) throw std::invalid_argument("tol must be >= 0");
}

namespace detail {

namespace {

// Appends runs covering `pieces` clipped to [win_lo, win_hi]. All piece
// boundaries and both window ends must be grid times.
void append_runs(const KnotGrid& grid, int j,
                 const std::vector<std::pair<double, double>>& pieces, double win_lo,
                 double win_hi, const std::string& site, std::vector<Run>& out) {
  if (win_hi <= win_lo) return;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    double p_lo = std::max(pieces[k].first, win_lo);
    double p_hi = std::min(k + 1 < pieces.size() ? pieces[k + 1].first : win_hi, win_hi);
    double v = pieces[k].second;
    if (v == 0.0 || p_hi <= p_lo) continue;
    if (!grid.contains_time(p_lo) || !grid.contains_time(p_hi))
      throw std::runtime_error("site " + site +
                               ": grid is missing a censoring or feature-change time; "
                               "build the grid from this dataset");
    out.push_back(Run{j, static_cast<std::uint32_t>(grid.segment_index(p_lo)),
                      static_cast<std::uint32_t>(grid.segment_index(p_hi)), v});
  }
}

void scatter_run(const CompiledData& cd, const Run& r, double scale, CoefMatrix& out) {
  double* row = out.row(static_cast<std::size_t>(r.j));
  for (std::uint32_t l = r.s; l < r.e; ++l) row[l] += scale * r.v * cd.seg_len[l];
}

double run_mass(const CompiledData& cd, const Run& r, const CoefMatrix& w) {
  const double* row = w.row(static_cast<std::size_t>(r.j));
  double acc = 0.0;
  for (std::uint32_t l = r.s; l < r.e; ++l) acc += row[l] * cd.seg_len[l];
  return r.v * acc;
}

}  // namespace

CompiledData compile_dataset(const std::vector<Observation>& data, GridPtr grid,
                             std::size_t d) {
  CompiledData cd;
  cd.grid = std::move(grid);
  cd.d = d;
  const KnotGrid& g = *cd.grid;
  cd.seg_len.resize(g.size());
  for (std::size_t l = 0; l < g.size(); ++l) cd.seg_len[l] = g.segment_length(l);
  cd.outer_grad = CoefMatrix(d + 1, g.size());

  const std::vector<std::pair<double, double>> baseline{{0.0, 1.0}};
  cd.obs.reserve(data.size());
  for (const auto& obs : data) {
    obs.validate();
    if (obs.t_hi > g.horizon())
      throw std::runtime_error("site " + obs.site_id + ": censoring time beyond the grid horizon");
    CompiledObs co;
    co.weight = obs.weight;
    co.interval = obs.censor == CensorType::Interval;
    double outer_hi = co.interval ? obs.t_lo : obs.t_hi;

    append_runs(g, 0, baseline, 0.0, outer_hi, obs.site_id, co.outer);
    if (co.interval) append_runs(g, 0, baseline, obs.t_lo, obs.t_hi, obs.site_id, co.bracket);
    for (const auto& track : obs.tracks) {
      if (track.feature_id > static_cast<int>(d))
        throw std::runtime_error("site " + obs.site_id + ": feature id " +
                                 std::to_string(track.feature_id) + " exceeds dimension " +
                                 std::to_string(d));
      append_runs(g, track.feature_id, track.events, 0.0, outer_hi, obs.site_id, co.outer);
      if (co.interval)
        append_runs(g, track.feature_id, track.events, obs.t_lo, obs.t_hi, obs.site_id,
                    co.bracket);
    }
    if (co.interval && co.bracket.empty())
      throw std::runtime_error("site " + obs.site_id +
                               ": interval bracket covers no grid segment");

    for (const Run& r : co.outer) scatter_run(cd, r, co.weight, cd.outer_grad);
    cd.sum_weights += co.weight;
    cd.n_interval += co.interval ? 1 : 0;
    cd.max_end_time = std::max(cd.max_end_time, obs.t_hi);
    cd.obs.push_back(std::move(co));
  }
  return cd;
}

double bracket_mass(const CompiledData& cd, const CompiledObs& o, const CoefMatrix& w) {
  double B = 0.0;
  for (const Run& r : o.bracket) B += run_mass(cd, r, w);
  return B;
}

double bracket_scale(double B) {
  // Floor keeps the factor finite while a bracket's hazard mass is still
  // (numerically) zero; the likelihood pushes iterates away from that set.
  B = std::max(B, 1e-8);
  return 1.0 / (1.0 - std::exp(B));
}

double objective(const CompiledData& cd, const CoefMatrix& w, const ModelVariant& variant,
                 double* nll_sum) {
  // Prefix integrals P[j][l] = int_0^{times[l]} w_j.
  CoefMatrix prefix(w.rows, w.cols);
  for (std::size_t j = 0; j < w.rows; ++j) {
    const double* wr = w.row(j);
    double* pr = prefix.row(j);
    double acc = 0.0;
    for (std::size_t l = 0; l < w.cols; ++l) {
      pr[l] = acc;
      acc += wr[l] * cd.seg_len[l];
    }
  }
  auto window_mass = [&](const std::vector<Run>& runs) {
    double acc = 0.0;
    for (const Run& r : runs) {
      const double* pr = prefix.row(static_cast<std::size_t>(r.j));
      acc += r.v * (pr[r.e] - pr[r.s]);
    }
    return acc;
  };
  double acc = 0.0;
  for (const CompiledObs& o : cd.obs) {
    double nll = window_mass(o.outer);
    if (o.interval) nll += neg_log_one_minus_exp_neg(window_mass(o.bracket));
    acc += o.weight * nll;
  }
  if (nll_sum) *nll_sum = acc;
  if (variant.penalty != Penalty::None && variant.gamma != 0.0) {
    for (std::size_t j = 0; j < w.rows; ++j) {
      const double* wr = w.row(j);
      double pen = 0.0;
      for (std::size_t l = 0; l + 1 < w.cols; ++l) {
        double diff = std::abs(wr[l + 1] - wr[l]);
        pen += variant.penalty == Penalty::TV ? diff : std::log1p(diff / variant.epsilon);
      }
      acc += variant.gamma * pen;
    }
  }
  return acc;
}

void full_gradient(const CompiledData& cd, const CoefMatrix& w, CoefMatrix& out) {
  out = cd.outer_grad;
  for (const CompiledObs& o : cd.obs) {
    if (!o.interval) continue;
    double c = bracket_scale(bracket_mass(cd, o, w));
    for (const Run& r : o.bracket) scatter_run(cd, r, o.weight * c, out);
  }
}

}  // namespace detail

namespace {

using detail::CoefMatrix;
using detail::CompiledData;
using detail::CompiledObs;
using detail::Run;

// Deterministic Fisher-Yates (std::shuffle is implementation-defined).
void shuffle_order(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t k = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[k]);
  }
}

void add_xi_gradient(const CoefMatrix& w, double scale, double epsilon, CoefMatrix& dir) {
  if (scale == 0.0) return;
  for (std::size_t j = 0; j < w.rows; ++j) {
    const double* wr = w.row(j);
    double* dr = dir.row(j);
    for (std::size_t l = 0; l + 1 < w.cols; ++l) {
      double diff = wr[l + 1] - wr[l];
      if (diff == 0.0) continue;
      double sign = diff > 0.0 ? 1.0 : -1.0;
      double s = (1.0 / (epsilon + std::abs(diff)) - 1.0 / epsilon) * sign * scale;
      dr[l] -= s;
      dr[l + 1] += s;
    }
  }
}

struct StepContext {
  double eta;
  double prox_gamma;  // eta * gamma / n (TV) or eta * gamma / (epsilon n) (log)
  bool adagrad;
  double adagrad_eps;
  const ModelVariant* variant;
  hazreg::detail::ProxWorkspace* prox_ws;
};

void apply_step(CoefMatrix& w, const CoefMatrix& dir, CoefMatrix& accum,
                const StepContext& ctx) {
  for (std::size_t j = 0; j < w.rows; ++j) {
    double* wr = w.row(j);
    const double* dr = dir.row(j);
    if (ctx.adagrad) {
      double* gr = accum.row(j);
      for (std::size_t l = 0; l < w.cols; ++l) {
        gr[l] += dr[l] * dr[l];
        wr[l] -= ctx.eta * dr[l] / (std::sqrt(gr[l]) + ctx.adagrad_eps);
      }
    } else {
      for (std::size_t l = 0; l < w.cols; ++l) wr[l] -= ctx.eta * dr[l];
    }
    hazreg::detail::prox_full_inplace(wr, w.cols, *ctx.variant, ctx.prox_gamma, *ctx.prox_ws);
#ifndef NDEBUG
    for (std::size_t l = 0; l < w.cols; ++l) {
      assert(wr[l] >= 0.0);
      assert(!(ctx.variant->monotone && l > 0 && wr[l] < wr[l - 1]));
    }
#endif
  }
}

CoefficientSet matrix_to_coeffs(const CoefMatrix& w, const GridPtr& grid,
                                const ModelVariant& variant) {
  CoefficientSet out = CoefficientSet::zeros(grid, w.rows - 1, variant);
  for (std::size_t j = 0; j < w.rows; ++j) {
    auto& vals = out.coefficient(j).values();
    std::copy(w.row(j), w.row(j) + w.cols, vals.begin());
  }
  return out;
}

}  // namespace

FitResult fit(const std::vector<Observation>& data, GridPtr grid, const ModelVariant& variant,
              const SolverConfig& cfg, const std::vector<Observation>* test_data,
              std::size_t n_features) {
  variant.validate();
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("fit needs at least one observation");

  std::size_t d = n_features;
  for (const auto& obs : data)
    for (const auto& track : obs.tracks)
      d = std::max(d, static_cast<std::size_t>(track.feature_id));

  const CompiledData cd = detail::compile_dataset(data, std::move(grid), d);
  const std::size_t n = cd.obs.size();
  const std::size_t K = cd.grid->size();
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), n);

  // Zero coefficients make every interval bracket a probability-zero event
  // (B = 0, infinite loss, undefined gradient), so the baseline starts at the
  // moment-matched constant rate  #hacked / total exposure  instead.
  double exposure = 0.0;
  for (const auto& obs : data) exposure += obs.t_hi;
  double init_rate = cd.n_interval > 0 ? static_cast<double>(cd.n_interval) / exposure : 0.0;

  CoefMatrix w(d + 1, K);
  for (std::size_t l = 0; l < K; ++l) w.at(0, l) = init_rate;

  const double eta = cfg.eta > 0.0 ? cfg.eta : 0.1 / std::max(cd.max_end_time, 1e-12);
  double gamma_eff = variant.penalty == Penalty::Log ? variant.gamma / variant.epsilon
                                                     : variant.gamma;
  if (variant.penalty == Penalty::None) gamma_eff = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  detail::ProxWorkspace prox_ws;
  StepContext ctx{eta, eta * gamma_eff * inv_n, cfg.adagrad, cfg.adagrad_eps, &variant,
                  &prox_ws};
  const double xi_scale = variant.penalty == Penalty::Log ? variant.gamma * inv_n : 0.0;

  FitResult result{matrix_to_coeffs(w, cd.grid, variant), {}, {}, {}, 0, false};
  double nll_sum = 0.0;
  double initial_obj = detail::objective(cd, w, variant, &nll_sum);
  if (!std::isfinite(initial_obj))
    throw std::runtime_error("initial objective is not finite; check interval brackets");
  result.objective_trace.push_back(initial_obj);
  result.train_nll_trace.push_back(nll_sum / cd.sum_weights);

  auto trace_test = [&]() {
    if (!test_data) return;
    result.test_nll_trace.push_back(evaluate(matrix_to_coeffs(w, cd.grid, variant), *test_data));
  };
  trace_test();

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  CoefMatrix dir(d + 1, K), accum(d + 1, K), snapshot_mu(d + 1, K), snapshot_w(d + 1, K);
  std::vector<double> snapshot_c(n, 0.0);
  double prev_obj = initial_obj;

  auto end_of_pass = [&](double& obj) -> bool {
    // true => stop
    result.passes += 1;
    double pass_nll = 0.0;
    obj = detail::objective(cd, w, variant, &pass_nll);
    result.objective_trace.push_back(obj);
    result.train_nll_trace.push_back(pass_nll / cd.sum_weights);
    trace_test();
    if (obj > 10.0 * initial_obj + 1e-9)
      throw std::runtime_error("solver diverged: objective " + std::to_string(obj) +
                               " exceeds 10x the initial " + std::to_string(initial_obj) +
                               "; lower eta");
    bool stop = cfg.tol > 0.0 &&
                std::abs(obj - prev_obj) <= cfg.tol * std::max(1.0, std::abs(prev_obj));
    prev_obj = obj;
    return stop;
  };

  // Warmup: plain prox-SGD passes, no control variate.
  for (int pass = 0; pass < cfg.warmup_epochs; ++pass) {
    shuffle_order(order, rng);
    for (std::size_t start = 0; start < n; start += m) {
      std::size_t batch = std::min(m, n - start);
      double scale = 1.0 / static_cast<double>(batch);
      std::fill(dir.a.begin(), dir.a.end(), 0.0);
      for (std::size_t k = 0; k < batch; ++k) {
        const CompiledObs& o = cd.obs[order[start + k]];
        for (const Run& r : o.outer) detail::scatter_run(cd, r, scale * o.weight, dir);
        if (o.interval) {
          double c = detail::bracket_scale(detail::bracket_mass(cd, o, w));
          for (const Run& r : o.bracket) detail::scatter_run(cd, r, scale * o.weight * c, dir);
        }
      }
      add_xi_gradient(w, xi_scale, variant.epsilon, dir);
      apply_step(w, dir, accum, ctx);
    }
    double obj;
    if (end_of_pass(obj)) {
      result.converged = true;
      break;
    }
  }

  // Prox-SVRG passes.
  if (!result.converged) {
    for (int pass = 0; pass < cfg.epochs; ++pass) {
      if (pass % cfg.full_grad_every == 0) {
        snapshot_w = w;
        detail::full_gradient(cd, snapshot_w, snapshot_mu);
        for (std::size_t i = 0; i < n; ++i) {
          const CompiledObs& o = cd.obs[i];
          snapshot_c[i] =
              o.interval ? detail::bracket_scale(detail::bracket_mass(cd, o, snapshot_w)) : 0.0;
        }
      }
      shuffle_order(order, rng);
      for (std::size_t start = 0; start < n; start += m) {
        std::size_t batch = std::min(m, n - start);
        double scale = 1.0 / static_cast<double>(batch);
        for (std::size_t idx = 0; idx < dir.a.size(); ++idx)
          dir.a[idx] = snapshot_mu.a[idx] * inv_n;
        for (std::size_t k = 0; k < batch; ++k) {
          std::size_t i = order[start + k];
          const CompiledObs& o = cd.obs[i];
          if (!o.interval) continue;  // outer gradients cancel in the control variate
          double delta = detail::bracket_scale(detail::bracket_mass(cd, o, w)) - snapshot_c[i];
          if (delta == 0.0) continue;
          for (const Run& r : o.bracket)
            detail::scatter_run(cd, r, scale * o.weight * delta, dir);
        }
        add_xi_gradient(w, xi_scale, variant.epsilon, dir);
        apply_step(w, dir, accum, ctx);
      }
      double obj;
      if (end_of_pass(obj)) {
        result.converged = true;
        break;
      }
    }
  }

  result.coeffs = matrix_to_coeffs(w, cd.grid, variant);
  result.coeffs.validate();
  return result;
}

double evaluate(const CoefficientSet& coeffs, const std::vector<Observation>& data) {
  const KnotGrid& grid = *coeffs.grid();
  const std::size_t K = grid.size();
  const std::size_t d = coeffs.dim();
  const auto& times = grid.times();

  // Prefix integrals of every coefficient, then each site costs O(events).
  std::vector<std::vector<double>> prefix(d + 1, std::vector<double>(K, 0.0));
  for (std::size_t j = 0; j <= d; ++j) {
    const auto& vals = coeffs.coefficient(j).values();
    double acc = 0.0;
    for (std::size_t l = 0; l < K; ++l) {
      prefix[j][l] = acc;
      acc += vals[l] * grid.segment_length(l);
    }
  }
  auto integral = [&](std::size_t j, double t) {
    const auto& vals = coeffs.coefficient(j).values();
    if (t >= times.back()) return prefix[j][K - 1] + (t - times.back()) * vals.back();
    std::size_t l = grid.segment_index(t);
    return prefix[j][l] + (t - times[l]) * vals[l];
  };
  auto cumulative = [&](const Observation& obs, double t) {
    double acc = integral(0, t);
    for (const auto& track : obs.tracks) {
      if (track.feature_id > static_cast<int>(d))
        throw std::invalid_argument("site " + obs.site_id + ": feature id " +
                                    std::to_string(track.feature_id) +
                                    " exceeds model dimension");
      for (std::size_t k = 0; k < track.events.size(); ++k) {
        double start = std::min(track.events[k].first, t);
        double end =
            (k + 1 < track.events.size()) ? std::min(track.events[k + 1].first, t) : t;
        if (end <= start) break;
        double v = track.events[k].second;
        std::size_t j = static_cast<std::size_t>(track.feature_id);
        if (v != 0.0) acc += v * (integral(j, end) - integral(j, start));
      }
    }
    return acc;
  };

  double acc = 0.0, weights = 0.0;
  for (const auto& obs : data) {
    double nll;
    if (obs.censor == CensorType::Right) {
      nll = cumulative(obs, obs.t_hi);
    } else {
      double lo = cumulative(obs, obs.t_lo);
      nll = lo + neg_log_one_minus_exp_neg(cumulative(obs, obs.t_hi) - lo);
    }
    acc += obs.weight * nll;
    weights += obs.weight;
  }
  if (weights == 0.0) throw std::invalid_argument("evaluate needs at least one observation");
  return acc / weights;
}

std::size_t count_active_breakpoints(const CoefficientSet& coeffs, double tol) {
  if (tol < 0.0) throw std::invalid_argument("tol must be >= 0");
  std::size_t count = 0;
  for (std::size_t j = 0; j <= coeffs.dim(); ++j) {
    const auto& vals = coeffs.coefficient(j).values();
    for (std::size_t l = 0; l + 1 < vals.size(); ++l)
      if (std::abs(vals[l + 1] - vals[l]) > tol) ++count;
  }
  return count;
}

}  // namespace hazreg
