#pragma once

#include <map>
#include <utility>
#include <vector>

#include "hazreg/core.hpp"

namespace hazreg {

/// Sparse per-observation gradient of the negative log-likelihood with
/// respect to coefficient values, keyed by (coefficient index j in 0..d,
/// knot segment l). Only segments where the site's feature is active (or
/// j = 0 for the baseline) carry entries.
struct PerSampleGradient {
  std::map<std::pair<int, std::size_t>, double> entries;
};

/// -log(1 - e^{-B}) in a numerically stable form. Returns +inf for
/// B < 1e-12 (the probability-zero bracket sentinel).
double neg_log_one_minus_exp_neg(double B);

/// Per-site negative log-likelihood, weight applied.
/// Right-censored: weight * Lambda(T). Interval-censored:
/// weight * [Lambda(t_lo) - log(1 - e^{-B})] with B = Lambda(t_hi) - Lambda(t_lo).
double neg_log_likelihood(const CoefficientSet& coeffs, const Observation& obs);

/// Analytic derivative of neg_log_likelihood. Throws if an interval bracket
/// carries zero cumulative hazard (B = 0), where the gradient is undefined.
PerSampleGradient gradient(const CoefficientSet& coeffs, const Observation& obs);

/// The variant's penalty for one coefficient vector, without the gamma
/// weight: TV, normalized discrete log TV, or 0.
double penalty_value(const std::vector<double>& values, const ModelVariant& variant);

/// Sum of per-sample losses plus gamma times the penalty over all
/// coefficients (baseline included). Propagates the +inf sentinel.
double dataset_objective(const CoefficientSet& coeffs, const std::vector<Observation>& data,
                         const ModelVariant& variant);

}  // namespace hazreg
