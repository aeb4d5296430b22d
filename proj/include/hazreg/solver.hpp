#pragma once

#include <cstdint>
#include <vector>

#include "hazreg/core.hpp"

namespace hazreg {

struct SolverConfig {
  double eta = 0.0;        // learning rate; 0 selects the default guess
  int minibatch = 10;      // m >= 1 (clamped to n)
  int epochs = 30;         // SVRG data passes
  int warmup_epochs = 2;   // plain prox-SGD passes before SVRG
  int full_grad_every = 1; // data passes between snapshot refreshes
  bool adagrad = true;
  double adagrad_eps = 1e-8;
  std::uint64_t seed = 0;
  double tol = 0.0;        // relative objective-change stop; 0 disables

  void validate() const;
};

struct FitResult {
  CoefficientSet coeffs;
  std::vector<double> objective_trace;  // train objective, entry 0 = initial
  std::vector<double> train_nll_trace;  // mean train NLL (penalty excluded), aligned
  std::vector<double> test_nll_trace;   // mean test NLL per pass (if test data given)
  int passes = 0;
  bool converged = false;
};

/// Fit a coefficient set on `data` by proximal SVRG (with optional prox-SGD
/// warmup and Adagrad diagonal preconditioning). The grid must contain every
/// censoring boundary and feature change time of `data`. When `test_data` is
/// given, the mean test NLL is traced after every pass. `n_features` forces
/// the model dimension (0 infers it from the data's feature ids).
FitResult fit(const std::vector<Observation>& data, GridPtr grid, const ModelVariant& variant,
              const SolverConfig& cfg, const std::vector<Observation>* test_data = nullptr,
              std::size_t n_features = 0);

/// Mean per-site negative log-likelihood (penalty excluded), weights applied:
/// sum_i w_i nll_i / sum_i w_i.
double evaluate(const CoefficientSet& coeffs, const std::vector<Observation>& data);

/// Number of (coefficient, knot) pairs whose jump exceeds tol.
std::size_t count_active_breakpoints(const CoefficientSet& coeffs, double tol);

namespace detail {

/// Dense (d+1) x K coefficient matrix, row j = coefficient j, row 0 = baseline.
struct CoefMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  CoefMatrix() = default;
  CoefMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& at(std::size_t j, std::size_t l) { return a[j * cols + l]; }
  double at(std::size_t j, std::size_t l) const { return a[j * cols + l]; }
  double* row(std::size_t j) { return a.data() + j * cols; }
  const double* row(std::size_t j) const { return a.data() + j * cols; }
};

/// A maximal range of grid segments [s, e) on which one feature of one site
/// is constant with value v, clipped to an integration window.
struct Run {
  int j;            // coefficient index, 0 = baseline
  std::uint32_t s;  // first segment
  std::uint32_t e;  // one past the last segment
  double v;         // feature value on the range
};

struct CompiledObs {
  double weight = 1.0;
  bool interval = false;
  std::vector<Run> outer;    // window [0, t_lo] (interval) or [0, T] (right)
  std::vector<Run> bracket;  // window [t_lo, t_hi], interval only
};

/// Dataset compiled against a fit grid: per-site runs plus the constant part
/// of the full gradient (the outer windows do not depend on w).
struct CompiledData {
  GridPtr grid;
  std::size_t d = 0;
  std::vector<double> seg_len;
  std::vector<CompiledObs> obs;
  CoefMatrix outer_grad;  // sum_i weight_i * a_i
  double sum_weights = 0.0;
  std::size_t n_interval = 0;
  double max_end_time = 0.0;
};

CompiledData compile_dataset(const std::vector<Observation>& data, GridPtr grid,
                             std::size_t d);

/// Bracket hazard mass B_i = sum over bracket runs of v * w_j * segment length.
double bracket_mass(const CompiledData& cd, const CompiledObs& o, const CoefMatrix& w);

/// 1/(1 - e^B) with B floored at 1e-8 to keep early iterates finite.
double bracket_scale(double B);

/// Train objective (sum scale) of the compiled dataset at w. When nll_sum is
/// given it receives the loss part alone (no penalty).
double objective(const CompiledData& cd, const CoefMatrix& w, const ModelVariant& variant,
                 double* nll_sum = nullptr);

/// Full loss gradient sum_i grad g_i(w) (sum scale; fit() divides by n).
void full_gradient(const CompiledData& cd, const CoefMatrix& w, CoefMatrix& out);

}  // namespace detail

}  // namespace hazreg
