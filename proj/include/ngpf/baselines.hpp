#pragma once

#include "ngpf/model.hpp"
#include "ngpf/synth.hpp"

namespace ngpf {

/// Centered equally-weighted moving average per series over observed cells,
/// shrinking at the boundaries. Cells whose window holds no observation come
/// back as NaN.
Matrix moving_average_mean(const Dataset& data, Index window);

/// EWMA covariance recursion
///   S(t_i) = (1-lambda) r_{i-1} r_{i-1}' + lambda S(t_{i-1}),
/// with r the residual against mu_est. Rows/columns touched by a missing cell
/// (or missing mean) at step i-1 are frozen at their previous values.
/// lambda in [0,1]; the endpoints are the degenerate limits.
std::vector<Matrix> ewma_cov(const Dataset& data, const Matrix& mu_est, double lambda,
                             const Matrix& init);

/// Default initializer: sample covariance of the first ten fully observed
/// steps (diagonal of per-series variances when none exist).
Matrix ewma_default_init(const Dataset& data);

struct LambdaSelection {
  double lambda_star = 0.0;
  std::vector<std::pair<double, double>> table;  // (lambda, mse)
};

/// Grid search for the lambda minimizing the mean squared covariance error
/// against the ground truth; ties break toward the larger lambda. The
/// objective is the unstandardized counterpart of the standardized-error
/// summaries (same accumulation code).
LambdaSelection select_lambda(const Dataset& data, const GroundTruth& truth,
                              const std::vector<double>& lambda_grid,
                              Index ma_window = 12);

}  // namespace ngpf
