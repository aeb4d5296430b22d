#pragma once

#include <vector>

#include "hazreg/core.hpp"

namespace hazreg {

/// Total variation of a coefficient vector: sum_l |v[l+1] - v[l]|.
double tv_discrete(const std::vector<double>& values);

/// Discrete log penalty, normalized so a constant vector scores 0:
/// sum_l [log(epsilon + |v[l+1] - v[l]|) - log(epsilon)].
double tv_log_discrete(const std::vector<double>& values, double epsilon);

/// Gradient of the smooth remainder xi(w) = tv_log_discrete(w) - tv_discrete(w)/epsilon,
/// i.e. D^T diag(1/(eps + |Dw|) - 1/eps) sign(Dw). Zero wherever Dw = 0,
/// which is what makes xi continuously differentiable.
std::vector<double> xi_gradient(const std::vector<double>& values, double epsilon);

/// Coordinatewise max(0, .).
std::vector<double> project_nonneg(std::vector<double> values);

/// Exact minimizer of 1/2 ||v - w||^2 + gamma sum|w[l+1] - w[l]| by the
/// linear-time fused-lasso dynamic program.
std::vector<double> prox_fused_lasso(const std::vector<double>& values, double gamma);

/// Exact minimizer of 1/2 ||v - w||^2 + gamma sum(w[l+1] - w[l]) subject to
/// w non-decreasing. Under the constraint the TV term is linear, so this is
/// isotonic regression of v with gamma added to v[0] and subtracted from
/// v[n-1], solved by pool-adjacent-violators.
std::vector<double> prox_fused_isotonic(const std::vector<double>& values, double gamma);

/// Plain isotonic regression (least squares under w non-decreasing),
/// deterministic left-to-right pooling.
std::vector<double> isotonic_regression(const std::vector<double>& values);

/// Proximal map of the variant's nonsmooth part: the fused (or fused
/// isotonic) prox with weight step_scaled_gamma followed by projection onto
/// the nonnegative cone. For Penalty::None the fused weight is 0. The caller
/// supplies the step-scaled weight (eta * gamma, or eta * gamma / epsilon
/// for the log penalty, both divided by n when steps are per-average-loss).
std::vector<double> prox_full(const std::vector<double>& values, const ModelVariant& variant,
                              double step_scaled_gamma);

namespace detail {

/// Reusable scratch for the in-place prox kernels (the solver calls them a
/// few hundred thousand times per fit).
struct ProxWorkspace {
  std::vector<double> x, a, b, tm, tp;
  std::vector<std::pair<double, std::size_t>> blocks;
};

/// In-place prox of the variant's nonsmooth part on values[0..n).
void prox_full_inplace(double* values, std::size_t n, const ModelVariant& variant,
                       double step_scaled_gamma, ProxWorkspace& ws);

}  // namespace detail

}  // namespace hazreg
