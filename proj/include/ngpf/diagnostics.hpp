#pragma once

#include "ngpf/model.hpp"
#include "ngpf/sampler.hpp"

namespace ngpf {

/// Gelman-Rubin potential scale reduction over equal-length segments of one
/// sequence: sqrt(((n-1)/n W + B/n) / W), 1 when the within variance is zero.
/// A remainder shorter than a segment is dropped from the front.
double psrf_split(const Eigen::Ref<const Vector>& samples, Index segments = 6);

/// Shortest contiguous interval containing ceil(prob * n) sorted samples
/// (leftmost on ties). Requires at least 20 samples.
std::pair<double, double> hpd_interval(const Eigen::Ref<const Vector>& samples,
                                       double prob = 0.95);

/// Squared errors between estimated and true paths, flattened over all
/// entries and steps (covariance block and mean block separately).
Vector sigma_squared_errors(const MeanCovPath& est, const MeanCovPath& truth);
Vector mu_squared_errors(const MeanCovPath& est, const MeanCovPath& truth);

struct ErrorSummaryRow {
  double mean = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double max = 0.0;
};

/// Squared errors standardized by the squared range of the true process
/// (range over all entries and steps, mean and covariance separately), then
/// summarized as Mean / 90th / 95th / Max.
struct ErrorSummary {
  ErrorSummaryRow sigma;
  ErrorSummaryRow mu;
  double range_mu = 0.0;
  double range_sigma = 0.0;
};
ErrorSummary standardized_errors(const MeanCovPath& est, const MeanCovPath& truth);

/// Pointwise posterior means and hpd bands of every mu_j(t_i) and
/// Sigma_jk(t_i) over the retained draws.
struct ChainSummary {
  Matrix mu_mean, mu_lo, mu_hi;                  // p x T
  std::vector<Matrix> sigma_mean, sigma_lo, sigma_hi;  // T matrices, p x p
  double prob = 0.95;
};
ChainSummary summarize_chain(const Chain& chain, double prob = 0.95);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(Vector samples, double q);

}  // namespace ngpf
