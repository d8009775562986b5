#include "ngpf/baselines.hpp"

#include "ngpf/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ngpf {

Matrix moving_average_mean(const Dataset& data, Index window) {
  if (window < 1) throw DataError("moving_average_mean: window must be >= 1");
  const Index p = data.series_count();
  const Index T = data.step_count();
  const Index left = (window - 1) / 2;
  const Index right = window / 2;
  Matrix out(p, T);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < T; ++i) {
      const Index lo = std::max<Index>(0, i - left);
      const Index hi = std::min<Index>(T - 1, i + right);
      double sum = 0.0;
      Index count = 0;
      for (Index t = lo; t <= hi; ++t) {
        if (!data.mask(j, t)) continue;
        sum += data.values(j, t);
        ++count;
      }
      out(j, i) = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

std::vector<Matrix> ewma_cov(const Dataset& data, const Matrix& mu_est, double lambda,
                             const Matrix& init) {
  const Index p = data.series_count();
  const Index T = data.step_count();
  if (mu_est.rows() != p || mu_est.cols() != T)
    throw DataError("ewma_cov: mean estimate shape does not match data");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw DataError("ewma_cov: lambda must lie in [0,1]");
  if (init.rows() != p || init.cols() != p)
    throw DataError("ewma_cov: init shape mismatch");
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(init, Eigen::EigenvaluesOnly);
    const double tr = std::max(1.0, std::abs(init.trace()));
    if (es.eigenvalues().minCoeff() < -1e-10 * tr)
      throw DataError("ewma_cov: init not positive semidefinite");
  }

  std::vector<Matrix> out(T);
  out[0] = init;
  for (Index i = 1; i < T; ++i) {
    std::vector<Index> ok;
    for (Index j = 0; j < p; ++j)
      if (data.mask(j, i - 1) && std::isfinite(mu_est(j, i - 1))) ok.push_back(j);
    Matrix next = out[i - 1];  // frozen rows/columns keep previous values
    for (Index a : ok)
      for (Index b : ok) {
        const double ra = data.values(a, i - 1) - mu_est(a, i - 1);
        const double rb = data.values(b, i - 1) - mu_est(b, i - 1);
        next(a, b) = (1.0 - lambda) * ra * rb + lambda * out[i - 1](a, b);
      }
    out[i] = std::move(next);
  }
  return out;
}

Matrix ewma_default_init(const Dataset& data) {
  const Index p = data.series_count();
  const Index T = data.step_count();
  std::vector<Index> complete;
  for (Index i = 0; i < T && static_cast<Index>(complete.size()) < 10; ++i)
    if (data.mask.col(i).all()) complete.push_back(i);

  if (complete.size() >= 2) {
    Vector mean = Vector::Zero(p);
    for (Index i : complete) mean += data.values.col(i);
    mean /= static_cast<double>(complete.size());
    Matrix cov = Matrix::Zero(p, p);
    for (Index i : complete) {
      const Vector c = data.values.col(i) - mean;
      cov.noalias() += c * c.transpose();
    }
    return cov / static_cast<double>(complete.size() - 1);
  }

  // Not enough complete steps: diagonal of per-series variances.
  Vector var = Vector::Ones(p);
  for (Index j = 0; j < p; ++j) {
    double s = 0.0, ss = 0.0;
    Index n = 0;
    for (Index i = 0; i < T; ++i) {
      if (!data.mask(j, i)) continue;
      s += data.values(j, i);
      ss += data.values(j, i) * data.values(j, i);
      ++n;
    }
    if (n >= 2) var[j] = std::max(1e-12, (ss - s * s / n) / (n - 1));
  }
  return var.asDiagonal();
}

LambdaSelection select_lambda(const Dataset& data, const GroundTruth& truth,
                              const std::vector<double>& lambda_grid, Index ma_window) {
  if (lambda_grid.empty()) throw DataError("select_lambda: empty lambda grid");
  const Matrix mu = moving_average_mean(data, ma_window);
  const Matrix init = ewma_default_init(data);

  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());
  LambdaSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    MeanCovPath est;
    est.mu = mu;
    est.sigma = ewma_cov(data, mu, lambda, init);
    const double mse = sigma_squared_errors(est, truth.gamma).mean();
    sel.table.emplace_back(lambda, mse);
    if (mse <= best) {  // ties break toward the larger lambda
      best = mse;
      sel.lambda_star = lambda;
    }
  }
  return sel;
}

}  // namespace ngpf
