#include "hazreg/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hazreg {

double tv_discrete(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("tv of empty vector");
  double tv = 0.0;
  for (std::size_t l = 0; l + 1 < values.size(); ++l) tv += std::abs(values[l + 1] - values[l]);
  return tv;
}

double tv_log_discrete(const std::vector<double>& values, double epsilon) {
  if (values.empty()) throw std::invalid_argument("tv_log of empty vector");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  double acc = 0.0;
  for (std::size_t l = 0; l + 1 < values.size(); ++l)
    acc += std::log1p(std::abs(values[l + 1] - values[l]) / epsilon);
  return acc;
}

std::vector<double> xi_gradient(const std::vector<double>& values, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  const std::size_t n = values.size();
  std::vector<double> grad(n, 0.0);
  for (std::size_t l = 0; l + 1 < n; ++l) {
    double diff = values[l + 1] - values[l];
    if (diff == 0.0) continue;
    double sign = diff > 0.0 ? 1.0 : -1.0;
    double s = (1.0 / (epsilon + std::abs(diff)) - 1.0 / epsilon) * sign;
    // D^T maps the difference coordinate l to (-s at l, +s at l+1).
    grad[l] -= s;
    grad[l + 1] += s;
  }
  return grad;
}

std::vector<double> project_nonneg(std::vector<double> values) {
  for (double& v : values) v = std::max(0.0, v);
  return values;
}

namespace detail {

namespace {

// Fused-lasso dynamic program (Johnson's O(n) algorithm). The derivative of
// the partial objective in theta_k is piecewise linear; it is kept as a knot
// list with boundary pieces (afirst, bfirst) / (alast, blast) and clipped at
// -gamma / +gamma each step. The clip points tm/tp are the back-pointers.
void fused_lasso_dp(const double* y, std::size_t n, double gamma, double* theta,
                    ProxWorkspace& ws) {
  if (n == 1 || gamma == 0.0) {
    if (theta != y) std::copy(y, y + n, theta);
    return;
  }
  ws.x.resize(2 * n);
  ws.a.resize(2 * n);
  ws.b.resize(2 * n);
  ws.tm.resize(n - 1);
  ws.tp.resize(n - 1);
  double* x = ws.x.data();
  double* a = ws.a.data();
  double* b = ws.b.data();
  double* tm = ws.tm.data();
  double* tp = ws.tp.data();

  std::size_t l, r, lo, hi;
  double afirst, bfirst, alast, blast, alo, blo, ahi, bhi;

  tm[0] = y[0] - gamma;
  tp[0] = y[0] + gamma;
  l = n - 1;
  r = n;
  x[l] = tm[0];
  x[r] = tp[0];
  a[l] = 1.0;
  b[l] = -y[0] + gamma;
  a[r] = -1.0;
  b[r] = y[0] + gamma;
  afirst = 1.0;
  bfirst = -y[1] - gamma;
  alast = -1.0;
  blast = y[1] - gamma;

  for (std::size_t k = 1; k + 1 < n; ++k) {
    // Walk up from the left until the derivative exceeds -gamma.
    alo = afirst;
    blo = bfirst;
    for (lo = l; lo <= r; ++lo) {
      if (alo * x[lo] + blo > -gamma) break;
      alo += a[lo];
      blo += b[lo];
    }
    // Walk down from the right until the derivative falls below +gamma.
    ahi = alast;
    bhi = blast;
    for (hi = r; hi >= lo; --hi) {
      if (-ahi * x[hi] - bhi < gamma) break;
      ahi += a[hi];
      bhi += b[hi];
    }

    tm[k] = (-gamma - blo) / alo;
    l = lo - 1;
    x[l] = tm[k];

    tp[k] = (gamma + bhi) / (-ahi);
    r = hi + 1;
    x[r] = tp[k];

    a[l] = alo;
    b[l] = blo + gamma;
    a[r] = ahi;
    b[r] = bhi + gamma;
    afirst = 1.0;
    bfirst = -y[k + 1] - gamma;
    alast = -1.0;
    blast = y[k + 1] - gamma;
  }

  // Last coefficient sits where the full derivative vanishes.
  alo = afirst;
  blo = bfirst;
  for (lo = l; lo <= r; ++lo) {
    if (alo * x[lo] + blo > 0.0) break;
    alo += a[lo];
    blo += b[lo];
  }
  theta[n - 1] = -blo / alo;
  for (std::size_t k = n - 1; k-- > 0;) {
    if (theta[k + 1] > tp[k])
      theta[k] = tp[k];
    else if (theta[k + 1] < tm[k])
      theta[k] = tm[k];
    else
      theta[k] = theta[k + 1];
  }
}

// Pool-adjacent-violators, deterministic left-to-right pooling.
void isotonic_inplace(double* v, std::size_t n, ProxWorkspace& ws) {
  auto& blocks = ws.blocks;  // (sum, count)
  blocks.clear();
  for (std::size_t i = 0; i < n; ++i) {
    blocks.emplace_back(v[i], 1);
    while (blocks.size() > 1) {
      auto& prev = blocks[blocks.size() - 2];
      auto& last = blocks.back();
      if (prev.first * static_cast<double>(last.second) <=
          last.first * static_cast<double>(prev.second))
        break;
      prev.first += last.first;
      prev.second += last.second;
      blocks.pop_back();
    }
  }
  std::size_t i = 0;
  for (const auto& [sum, count] : blocks) {
    double mean = sum / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) v[i++] = mean;
  }
}

}  // namespace

void prox_full_inplace(double* values, std::size_t n, const ModelVariant& variant,
                       double step_scaled_gamma, ProxWorkspace& ws) {
  if (step_scaled_gamma < 0.0) throw std::invalid_argument("step-scaled gamma must be >= 0");
  if (n == 0) throw std::invalid_argument("prox of empty vector");
  const double fused = variant.penalty == Penalty::None ? 0.0 : step_scaled_gamma;
  // Prox of the sum decomposes as nonneg-projection applied after the fused
  // prox (the projection only enlarges the TV subdifferential).
  if (variant.monotone) {
    if (n > 1 && fused != 0.0) {
      values[0] += fused;
      values[n - 1] -= fused;
    }
    isotonic_inplace(values, n, ws);
  } else {
    fused_lasso_dp(values, n, fused, values, ws);
  }
  for (std::size_t i = 0; i < n; ++i) values[i] = std::max(0.0, values[i]);
}

}  // namespace detail

std::vector<double> prox_fused_lasso(const std::vector<double>& y, double gamma) {
  if (y.empty()) throw std::invalid_argument("prox of empty vector");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  std::vector<double> theta = y;
  detail::ProxWorkspace ws;
  detail::fused_lasso_dp(y.data(), y.size(), gamma, theta.data(), ws);
  return theta;
}

std::vector<double> isotonic_regression(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("isotonic regression of empty vector");
  std::vector<double> v = values;
  detail::ProxWorkspace ws;
  detail::isotonic_inplace(v.data(), v.size(), ws);
  return v;
}

std::vector<double> prox_fused_isotonic(const std::vector<double>& values, double gamma) {
  if (values.empty()) throw std::invalid_argument("prox of empty vector");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  std::vector<double> shifted = values;
  if (shifted.size() > 1) {
    shifted.front() += gamma;
    shifted.back() -= gamma;
  }
  detail::ProxWorkspace ws;
  detail::isotonic_inplace(shifted.data(), shifted.size(), ws);
  return shifted;
}

std::vector<double> prox_full(const std::vector<double>& values, const ModelVariant& variant,
                              double step_scaled_gamma) {
  std::vector<double> w = values;
  detail::ProxWorkspace ws;
  detail::prox_full_inplace(w.data(), w.size(), variant, step_scaled_gamma, ws);
  return w;
}

}  // namespace hazreg
