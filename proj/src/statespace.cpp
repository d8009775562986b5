#include "ngpf/statespace.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace ngpf {

namespace {

void symmetrize(Matrix& m) { m = ((m + m.transpose()) * 0.5).eval(); }

void check_symmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols())
    throw DataError(std::string("StateSpaceSystem: ") + name + " not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw DataError(std::string("StateSpaceSystem: ") + name + " not symmetric");
}

std::vector<int> observed_rows(const BoolArray& mask, Index step) {
  std::vector<int> idx;
  idx.reserve(mask.rows());
  for (Index j = 0; j < mask.rows(); ++j)
    if (mask(j, step)) idx.push_back(static_cast<int>(j));
  return idx;
}

// One Kalman forward/backward pass shared across observation columns that
// have identical Z/H/mask. Covariance recursions run once; each column only
// adds cheap vector recursions.
struct PassOutput {
  std::vector<Matrix> predicted_mean;  // per column, d x n
  std::vector<Matrix> filtered_mean;
  std::vector<Matrix> smoothed_mean;
  std::vector<Matrix> predicted_cov;   // shared
  std::vector<Matrix> filtered_cov;
  std::vector<Matrix> smoothed_cov;
  double loglik = 0.0;
};

PassOutput run_pass(const StateSpaceSystem& sys, const BoolArray& mask,
                    const std::vector<const Matrix*>& ys, bool want_filtered_cov,
                    bool want_smooth, bool want_smoothed_cov, bool want_loglik) {
  const Index n = sys.n_steps;
  const Index d = sys.state_dim;
  const std::size_t ncol = ys.size();

  PassOutput out;
  out.predicted_mean.assign(ncol, Matrix::Zero(d, n));
  out.filtered_mean.assign(ncol, Matrix::Zero(d, n));
  out.predicted_cov.assign(n, Matrix());
  if (want_filtered_cov) out.filtered_cov.assign(n, Matrix());

  // Backward-pass ingredients per step.
  std::vector<Matrix> u(ncol, Matrix::Zero(d, n));  // Z' F^{-1} v
  std::vector<Matrix> zfz(n);                       // Z' F^{-1} Z
  std::vector<Matrix> lmat(n > 0 ? n - 1 : 0);      // T (I - P Z' F^{-1} Z)

  Matrix pred = sys.P1;
  for (std::size_t c = 0; c < ncol; ++c) out.predicted_mean[c].col(0) = sys.a1;

  const double log2pi = std::log(2.0 * std::numbers::pi);

  for (Index i = 0; i < n; ++i) {
    out.predicted_cov[i] = pred;
    const std::vector<int> idx = observed_rows(mask, i);
    const Index m = static_cast<Index>(idx.size());

    if (m > 0) {
      const Matrix zi = sys.Z[i](idx, Eigen::all);
      const Matrix hi = sys.H[i](idx, idx);
      Matrix f = zi * pred * zi.transpose() + hi;
      symmetrize(f);
      Eigen::LDLT<Matrix> ldlt(f);
      const Vector dvec = ldlt.vectorD();
      const double dmax = dvec.maxCoeff();
      if (!(dmax > 0) || dvec.minCoeff() <= dmax * 1e-14 || !std::isfinite(dmax))
        throw NumericalError("innovation covariance numerically singular at step " +
                             std::to_string(i + 1));

      zfz[i] = zi.transpose() * ldlt.solve(zi);

      for (std::size_t c = 0; c < ncol; ++c) {
        Vector yr(m);
        for (Index k = 0; k < m; ++k) yr[k] = (*ys[c])(idx[k], i);
        const Vector v = yr - zi * out.predicted_mean[c].col(i);
        const Vector fv = ldlt.solve(v);
        u[c].col(i) = zi.transpose() * fv;
        out.filtered_mean[c].col(i) = out.predicted_mean[c].col(i) + pred * u[c].col(i);
        if (want_loglik && c == 0) {
          double logdet = 0.0;
          for (Index k = 0; k < m; ++k) logdet += std::log(dvec[k]);
          out.loglik += -0.5 * (m * log2pi + logdet + v.dot(fv));
        }
      }
      if (want_filtered_cov) {
        Matrix fc = pred - pred * zfz[i] * pred;
        symmetrize(fc);
        out.filtered_cov[i] = std::move(fc);
      }
    } else {
      zfz[i] = Matrix::Zero(d, d);
      for (std::size_t c = 0; c < ncol; ++c)
        out.filtered_mean[c].col(i) = out.predicted_mean[c].col(i);
      if (want_filtered_cov) out.filtered_cov[i] = pred;
    }

    if (i + 1 < n) {
      const Matrix& ti = sys.T[i];
      lmat[i] = ti * (Matrix::Identity(d, d) - pred * zfz[i]);
      for (std::size_t c = 0; c < ncol; ++c)
        out.predicted_mean[c].col(i + 1) = ti * out.filtered_mean[c].col(i);
      Matrix next = ti * pred * lmat[i].transpose();
      next.noalias() += sys.R[i] * sys.q[i].asDiagonal() * sys.R[i].transpose();
      symmetrize(next);
      pred = std::move(next);
    }
  }

  if (want_smooth) {
    out.smoothed_mean.assign(ncol, Matrix::Zero(d, n));
    if (want_smoothed_cov) out.smoothed_cov.assign(n, Matrix());
    std::vector<Vector> r(ncol, Vector::Zero(d));
    Matrix nmat = Matrix::Zero(d, d);
    for (Index i = n - 1; i >= 0; --i) {
      for (std::size_t c = 0; c < ncol; ++c) {
        Vector rn = u[c].col(i);
        if (i + 1 < n) rn.noalias() += lmat[i].transpose() * r[c];
        out.smoothed_mean[c].col(i) =
            out.predicted_mean[c].col(i) + out.predicted_cov[i] * rn;
        r[c] = std::move(rn);
      }
      if (want_smoothed_cov) {
        Matrix nn = zfz[i];
        if (i + 1 < n) nn.noalias() += lmat[i].transpose() * nmat * lmat[i];
        Matrix sc = out.predicted_cov[i] - out.predicted_cov[i] * nn * out.predicted_cov[i];
        symmetrize(sc);
        out.smoothed_cov[i] = std::move(sc);
        nmat = std::move(nn);
      }
    }
  }
  return out;
}

void check_obs(const StateSpaceSystem& sys, const ObservationSequence& obs) {
  if (obs.y.rows() != sys.obs_dim || obs.y.cols() != sys.n_steps ||
      obs.mask.rows() != sys.obs_dim || obs.mask.cols() != sys.n_steps)
    throw DataError("ObservationSequence: shape does not match system");
}

}  // namespace

void StateSpaceSystem::validate() const {
  if (n_steps < 1) throw DataError("StateSpaceSystem: n_steps must be >= 1");
  if (state_dim < 1 || obs_dim < 1 || noise_dim < 1)
    throw DataError("StateSpaceSystem: dimensions must be >= 1");
  auto expect = [](const char* name, Index got, Index want) {
    if (got != want)
      throw DataError(std::string("StateSpaceSystem: ") + name + " count " +
                      std::to_string(got) + ", expected " + std::to_string(want));
  };
  expect("Z", static_cast<Index>(Z.size()), n_steps);
  expect("H", static_cast<Index>(H.size()), n_steps);
  expect("T", static_cast<Index>(T.size()), n_steps - 1);
  expect("R", static_cast<Index>(R.size()), n_steps - 1);
  expect("q", static_cast<Index>(q.size()), n_steps - 1);
  for (Index i = 0; i < n_steps; ++i) {
    if (Z[i].rows() != obs_dim || Z[i].cols() != state_dim)
      throw DataError("StateSpaceSystem: Z shape mismatch at step " + std::to_string(i + 1));
    if (H[i].rows() != obs_dim || H[i].cols() != obs_dim)
      throw DataError("StateSpaceSystem: H shape mismatch at step " + std::to_string(i + 1));
    check_symmetric(H[i], "H");
  }
  for (Index i = 0; i + 1 < n_steps; ++i) {
    if (T[i].rows() != state_dim || T[i].cols() != state_dim)
      throw DataError("StateSpaceSystem: T shape mismatch at step " + std::to_string(i + 1));
    if (R[i].rows() != state_dim || R[i].cols() != noise_dim)
      throw DataError("StateSpaceSystem: R shape mismatch at step " + std::to_string(i + 1));
    if (q[i].size() != noise_dim)
      throw DataError("StateSpaceSystem: q size mismatch at step " + std::to_string(i + 1));
    const double qscale = std::max(1.0, q[i].cwiseAbs().maxCoeff());
    if (q[i].minCoeff() < -1e-10 * qscale)
      throw DataError("StateSpaceSystem: negative state-noise variance at step " +
                      std::to_string(i + 1));
  }
  if (a1.size() != state_dim) throw DataError("StateSpaceSystem: a1 size mismatch");
  if (P1.rows() != state_dim || P1.cols() != state_dim)
    throw DataError("StateSpaceSystem: P1 shape mismatch");
  check_symmetric(P1, "P1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(P1, Eigen::EigenvaluesOnly);
  const double tr = std::max(1.0, std::abs(P1.trace()));
  if (es.eigenvalues().minCoeff() < -1e-10 * tr)
    throw DataError("StateSpaceSystem: P1 not positive semidefinite");
}

ObservationSequence ObservationSequence::fully_observed(Matrix y) {
  ObservationSequence o;
  o.mask = BoolArray::Constant(y.rows(), y.cols(), true);
  o.y = std::move(y);
  return o;
}

SmootherOutput kalman_filter(const StateSpaceSystem& sys, const ObservationSequence& obs) {
  sys.validate();
  check_obs(sys, obs);
  PassOutput p = run_pass(sys, obs.mask, {&obs.y}, true, false, false, true);
  SmootherOutput o;
  o.predicted_mean = std::move(p.predicted_mean[0]);
  o.filtered_mean = std::move(p.filtered_mean[0]);
  o.predicted_cov = std::move(p.predicted_cov);
  o.filtered_cov = std::move(p.filtered_cov);
  o.loglik = p.loglik;
  return o;
}

SmootherOutput kalman_smoother(const StateSpaceSystem& sys, const ObservationSequence& obs) {
  sys.validate();
  check_obs(sys, obs);
  PassOutput p = run_pass(sys, obs.mask, {&obs.y}, true, true, true, true);
  SmootherOutput o;
  o.predicted_mean = std::move(p.predicted_mean[0]);
  o.filtered_mean = std::move(p.filtered_mean[0]);
  o.smoothed_mean = std::move(p.smoothed_mean[0]);
  o.predicted_cov = std::move(p.predicted_cov);
  o.filtered_cov = std::move(p.filtered_cov);
  o.smoothed_cov = std::move(p.smoothed_cov);
  o.loglik = p.loglik;
  return o;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("psd_sqrt: eigendecomposition failed");
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Matrix simulate_states(const StateSpaceSystem& sys, RngStream& rng) {
  const Index n = sys.n_steps;
  const Index d = sys.state_dim;
  Matrix x(d, n);
  x.col(0) = sys.a1 + psd_sqrt(sys.P1) * rng.normal_vector(d);
  for (Index i = 0; i + 1 < n; ++i) {
    const Vector w = sys.q[i].cwiseMax(0.0).cwiseSqrt().cwiseProduct(
        rng.normal_vector(sys.noise_dim));
    x.col(i + 1) = sys.T[i] * x.col(i) + sys.R[i] * w;
  }
  return x;
}

Matrix simulation_smoother(const StateSpaceSystem& sys, const ObservationSequence& obs,
                           RngStream& rng, double* loglik) {
  sys.validate();
  check_obs(sys, obs);
  const Index n = sys.n_steps;

  // Unconditional pseudo-path, then pseudo-observations at unmasked cells.
  const Matrix xplus = simulate_states(sys, rng);
  Matrix yplus = Matrix::Zero(sys.obs_dim, n);
  for (Index i = 0; i < n; ++i) {
    const std::vector<int> idx = observed_rows(obs.mask, i);
    if (idx.empty()) continue;
    const Index m = static_cast<Index>(idx.size());
    const Matrix hi = sys.H[i](idx, idx);
    Vector noise(m);
    Eigen::LLT<Matrix> llt(hi);
    if (llt.info() == Eigen::Success) {
      noise = llt.matrixL() * rng.normal_vector(m);
    } else {
      noise = psd_sqrt(hi) * rng.normal_vector(m);
    }
    const Vector mean = sys.Z[i](idx, Eigen::all) * xplus.col(i);
    for (Index k = 0; k < m; ++k) yplus(idx[k], i) = mean[k] + noise[k];
  }

  PassOutput p =
      run_pass(sys, obs.mask, {&obs.y, &yplus}, false, true, false, loglik != nullptr);
  if (loglik != nullptr) *loglik = p.loglik;
  return xplus + p.smoothed_mean[0] - p.smoothed_mean[1];
}

}  // namespace ngpf
