#include "ngpf/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace ngpf {

double psrf_split(const Eigen::Ref<const Vector>& samples, Index segments) {
  if (segments < 2) throw DataError("psrf_split: need at least 2 segments");
  const Index total = samples.size();
  if (total < 2 * segments)
    throw DataError("psrf_split: sequence of length " + std::to_string(total) +
                    " too short for " + std::to_string(segments) + " segments");
  const Index n = total / segments;
  const Index start = total - n * segments;  // drop the oldest remainder

  Vector seg_mean(segments), seg_var(segments);
  for (Index s = 0; s < segments; ++s) {
    const auto seg = samples.segment(start + s * n, n);
    const double m = seg.mean();
    seg_mean[s] = m;
    seg_var[s] = (seg.array() - m).square().sum() / static_cast<double>(n - 1);
  }
  const double w = seg_var.mean();
  const double grand = seg_mean.mean();
  const double b =
      n * (seg_mean.array() - grand).square().sum() / static_cast<double>(segments - 1);
  if (w == 0.0) return 1.0;
  const double var_hat = (static_cast<double>(n - 1) / n) * w + b / n;
  // The estimated ratio can dip below 1 by sampling noise; the estimand
  // cannot, so floor it.
  return std::max(1.0, std::sqrt(var_hat / w));
}

std::pair<double, double> hpd_interval(const Eigen::Ref<const Vector>& samples,
                                       double prob) {
  const Index n = samples.size();
  if (n < 20) throw DataError("hpd_interval: need at least 20 samples");
  if (!(prob > 0.0 && prob <= 1.0)) throw DataError("hpd_interval: prob must be in (0,1]");
  std::vector<double> v(samples.data(), samples.data() + n);
  std::sort(v.begin(), v.end());
  const Index m = std::min<Index>(n, static_cast<Index>(std::ceil(prob * n)));
  Index best = 0;
  double best_width = v[m - 1] - v[0];
  for (Index i = 1; i + m <= n; ++i) {
    const double width = v[i + m - 1] - v[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {v[best], v[best + m - 1]};
}

double quantile(Vector samples, double q) {
  const Index n = samples.size();
  if (n == 0) throw DataError("quantile: empty sample");
  std::sort(samples.data(), samples.data() + n);
  if (n == 1) return samples[0];
  const double pos = q * static_cast<double>(n - 1);
  const Index lo = static_cast<Index>(std::floor(pos));
  const Index hi = std::min(n - 1, lo + 1);
  const double frac = pos - lo;
  return samples[lo] * (1.0 - frac) + samples[hi] * frac;
}

namespace {

void check_shapes(const MeanCovPath& est, const MeanCovPath& truth) {
  if (est.mu.rows() != truth.mu.rows() || est.mu.cols() != truth.mu.cols() ||
      est.sigma.size() != truth.sigma.size())
    throw DataError("error summary: estimate and truth shapes differ");
}

ErrorSummaryRow summarize(const Vector& values) {
  ErrorSummaryRow row;
  row.mean = values.mean();
  row.q90 = quantile(values, 0.90);
  row.q95 = quantile(values, 0.95);
  row.max = values.maxCoeff();
  return row;
}

}  // namespace

Vector sigma_squared_errors(const MeanCovPath& est, const MeanCovPath& truth) {
  check_shapes(est, truth);
  const Index T = truth.step_count();
  const Index p = truth.series_count();
  Vector out(T * p * p);
  Index idx = 0;
  for (Index i = 0; i < T; ++i) {
    const Matrix d = est.sigma[i] - truth.sigma[i];
    for (Index c = 0; c < p; ++c)
      for (Index r = 0; r < p; ++r) out[idx++] = d(r, c) * d(r, c);
  }
  return out;
}

Vector mu_squared_errors(const MeanCovPath& est, const MeanCovPath& truth) {
  check_shapes(est, truth);
  return (est.mu - truth.mu).array().square().reshaped();
}

ErrorSummary standardized_errors(const MeanCovPath& est, const MeanCovPath& truth) {
  check_shapes(est, truth);
  ErrorSummary summary;
  summary.range_mu = truth.mu.maxCoeff() - truth.mu.minCoeff();
  double smax = truth.sigma[0](0, 0), smin = smax;
  for (const Matrix& s : truth.sigma) {
    smax = std::max(smax, s.maxCoeff());
    smin = std::min(smin, s.minCoeff());
  }
  summary.range_sigma = smax - smin;
  if (summary.range_mu <= 0.0 || summary.range_sigma <= 0.0)
    throw DataError("standardized_errors: true process has zero range");

  summary.sigma = summarize(sigma_squared_errors(est, truth) /
                            (summary.range_sigma * summary.range_sigma));
  summary.mu =
      summarize(mu_squared_errors(est, truth) / (summary.range_mu * summary.range_mu));
  return summary;
}

ChainSummary summarize_chain(const Chain& chain, double prob) {
  if (chain.draws.empty()) throw DataError("summarize_chain: empty chain");
  const Index n = static_cast<Index>(chain.draws.size());
  const bool have_composed = chain.composed.size() == chain.draws.size();
  const MeanCovPath first =
      have_composed ? chain.composed[0] : compose_mean_cov(chain.draws[0], chain.grid);
  const Index p = first.series_count();
  const Index T = first.step_count();

  ChainSummary out;
  out.prob = prob;
  out.mu_mean = Matrix::Zero(p, T);
  out.mu_lo = Matrix::Zero(p, T);
  out.mu_hi = Matrix::Zero(p, T);
  out.sigma_mean.assign(T, Matrix::Zero(p, p));
  out.sigma_lo.assign(T, Matrix::Zero(p, p));
  out.sigma_hi.assign(T, Matrix::Zero(p, p));

  // Per-coordinate draw matrices: mu (p*T columns), unique sigma entries.
  Matrix mu_draws(n, p * T);
  const Index n_unique = p * (p + 1) / 2;
  Matrix sigma_draws(n, n_unique * T);
  for (Index d = 0; d < n; ++d) {
    const MeanCovPath path =
        have_composed ? chain.composed[d] : compose_mean_cov(chain.draws[d], chain.grid);
    mu_draws.row(d) = path.mu.reshaped().transpose();
    Index col = 0;
    for (Index i = 0; i < T; ++i)
      for (Index c = 0; c < p; ++c)
        for (Index r = c; r < p; ++r) sigma_draws(d, col++) = path.sigma[i](r, c);
  }

  if (n >= 20) {
    for (Index c = 0; c < mu_draws.cols(); ++c) {
      const auto [lo, hi] = hpd_interval(mu_draws.col(c), prob);
      const Index j = c % p, i = c / p;
      out.mu_mean(j, i) = mu_draws.col(c).mean();
      out.mu_lo(j, i) = lo;
      out.mu_hi(j, i) = hi;
    }
    Index col = 0;
    for (Index i = 0; i < T; ++i)
      for (Index cc = 0; cc < p; ++cc)
        for (Index r = cc; r < p; ++r) {
          const auto [lo, hi] = hpd_interval(sigma_draws.col(col), prob);
          const double m = sigma_draws.col(col).mean();
          out.sigma_mean[i](r, cc) = out.sigma_mean[i](cc, r) = m;
          out.sigma_lo[i](r, cc) = out.sigma_lo[i](cc, r) = lo;
          out.sigma_hi[i](r, cc) = out.sigma_hi[i](cc, r) = hi;
          ++col;
        }
  } else {
    // Too few draws for hpd: degenerate bands at min/max.
    for (Index c = 0; c < mu_draws.cols(); ++c) {
      const Index j = c % p, i = c / p;
      out.mu_mean(j, i) = mu_draws.col(c).mean();
      out.mu_lo(j, i) = mu_draws.col(c).minCoeff();
      out.mu_hi(j, i) = mu_draws.col(c).maxCoeff();
    }
    Index col = 0;
    for (Index i = 0; i < T; ++i)
      for (Index cc = 0; cc < p; ++cc)
        for (Index r = cc; r < p; ++r) {
          out.sigma_mean[i](r, cc) = out.sigma_mean[i](cc, r) = sigma_draws.col(col).mean();
          out.sigma_lo[i](r, cc) = out.sigma_lo[i](cc, r) = sigma_draws.col(col).minCoeff();
          out.sigma_hi[i](r, cc) = out.sigma_hi[i](cc, r) = sigma_draws.col(col).maxCoeff();
          ++col;
        }
  }
  return out;
}

}  // namespace ngpf
