#include "ngpf/synth.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <cmath>

namespace ngpf {

ScenarioSpec ScenarioSpec::scenario_a() { return ScenarioSpec{}; }

ScenarioSpec ScenarioSpec::scenario_b() {
  ScenarioSpec s;
  s.scenario = Kind::B;
  s.p = 10;
  s.L = 5;
  s.K = 4;
  return s;
}

namespace {

constexpr std::array<double, 11> kBumpLoc = {0.1,  0.13, 0.15, 0.23, 0.25, 0.40,
                                             0.44, 0.65, 0.76, 0.78, 0.81};
constexpr std::array<double, 11> kBumpHeight = {4,   5,   3,   4,   5,  4.2,
                                                2.1, 4.3, 3.1, 5.1, 4.2};
constexpr std::array<double, 11> kBumpWidth = {0.03,  0.03,  0.036, 0.06,  0.06, 0.18,
                                               0.06,  0.06,  0.03,  0.048, 0.03};

Matrix se_kernel(const Vector& a, const Vector& b, double kappa) {
  Matrix k(a.size(), b.size());
  for (Index i = 0; i < a.size(); ++i)
    for (Index j = 0; j < b.size(); ++j) {
      const double d = a[i] - b[j];
      k(i, j) = std::exp(-kappa * d * d);
    }
  return k;
}

// Cholesky with escalating diagonal jitter.
Eigen::LLT<Matrix> jittered_llt(Matrix k) {
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0000001; jitter *= 10.0) {
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(kj);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError("GP kernel matrix not factorizable even with 1e-6 jitter");
}

}  // namespace

Vector bumps(const Vector& grid_points, int shift) {
  const int n_bumps = static_cast<int>(kBumpLoc.size());
  Vector out = Vector::Zero(grid_points.size());
  for (Index i = 0; i < grid_points.size(); ++i) {
    // 1-periodic in the unit-interval argument: the identity on (0,1], and
    // grids extended past 1 keep producing features (both domain edges are
    // in the far tails, so the wrap stays continuous).
    const double t = grid_points[i] - std::floor(grid_points[i] - 1e-12);
    double v = 0.0;
    for (int j = 0; j < n_bumps; ++j) {
      const double loc = kBumpLoc[((j + shift) % n_bumps + n_bumps) % n_bumps];
      const double x = (t - loc) / kBumpWidth[j];
      const double g = 1.0 + std::abs(x);
      v += kBumpHeight[j] / (g * g * g * g);
    }
    out[i] = v;
  }
  return out;
}

Vector sample_gp(const Vector& grid_points, double kappa, RngStream& rng) {
  if (grid_points.size() == 0) return Vector();
  const Eigen::LLT<Matrix> llt = jittered_llt(se_kernel(grid_points, grid_points, kappa));
  return Matrix(llt.matrixL()) * rng.normal_vector(grid_points.size());
}

Vector sample_gp_conditional(const Vector& old_points, const Vector& old_values,
                             const Vector& new_points, double kappa, RngStream& rng) {
  if (new_points.size() == 0) return Vector();
  const Eigen::LLT<Matrix> llt = jittered_llt(se_kernel(old_points, old_points, kappa));
  const Matrix k_no = se_kernel(new_points, old_points, kappa);
  const Vector mean = k_no * llt.solve(old_values);
  Matrix cov = se_kernel(new_points, new_points, kappa) - k_no * llt.solve(k_no.transpose());
  cov = ((cov + cov.transpose()) * 0.5).eval();
  const Eigen::LLT<Matrix> cllt = jittered_llt(cov);
  return mean + Matrix(cllt.matrixL()) * rng.normal_vector(new_points.size());
}

namespace {

// Dictionary paths on the rescaled grid, per scenario; entry (l,k) of the
// bumps dictionary uses location shift l + k*L.
Matrix make_xi(const ScenarioSpec& spec, const Vector& rescaled, RngStream& rng) {
  Matrix xi(spec.L * spec.K, rescaled.size());
  for (Index k = 0; k < spec.K; ++k)
    for (Index l = 0; l < spec.L; ++l) {
      const Index r = l + k * spec.L;
      if (spec.scenario == ScenarioSpec::Kind::A)
        xi.row(r) = bumps(rescaled, static_cast<int>(r)).transpose();
      else
        xi.row(r) = sample_gp(rescaled, spec.kappa, rng).transpose();
    }
  return xi;
}

Matrix make_psi(const ScenarioSpec& spec, const Vector& rescaled, RngStream& rng) {
  Matrix psi(spec.K, rescaled.size());
  for (Index k = 0; k < spec.K; ++k)
    psi.row(k) = sample_gp(rescaled, spec.kappa, rng).transpose();
  return psi;
}

MeanCovPath compose_truth(const Matrix& theta, const Vector& sigma0, const Matrix& xi,
                          const Matrix& psi) {
  const Index T = xi.cols();
  const Index L = theta.cols();
  const Index K = psi.rows();
  MeanCovPath path;
  path.mu.resize(theta.rows(), T);
  path.sigma.resize(T);
  for (Index i = 0; i < T; ++i) {
    const Eigen::Map<const Matrix> xi_i(xi.col(i).data(), L, K);
    const Matrix lambda = theta * xi_i;
    path.mu.col(i) = lambda * psi.col(i);
    Matrix s = lambda * lambda.transpose();
    s.diagonal() += sigma0;
    path.sigma[i] = std::move(s);
  }
  return path;
}

Dataset emit_observations(const GroundTruth& truth, const Matrix& psi, RngStream& rng) {
  const Index p = truth.theta.rows();
  const Index K = psi.rows();
  const Index T = psi.cols();
  const Index L = truth.theta.cols();
  Matrix y(p, T);
  for (Index i = 0; i < T; ++i) {
    const Eigen::Map<const Matrix> xi_i(truth.xi.col(i).data(), L, K);
    const Vector eta = psi.col(i) + rng.normal_vector(K);
    y.col(i) = truth.theta * (xi_i * eta) +
               truth.sigma0_diag.cwiseSqrt().cwiseProduct(rng.normal_vector(p));
  }
  return Dataset::fully_observed(truth.grid.raw, std::move(y));
}

}  // namespace

std::pair<Dataset, GroundTruth> generate(const ScenarioSpec& spec, RngStream& rng) {
  if (spec.p < 1 || spec.L < 1 || spec.K < 1 || spec.T < 1)
    throw DataError("ScenarioSpec: dimensions must be >= 1");

  std::vector<double> times(spec.T);
  for (Index i = 0; i < spec.T; ++i) times[i] = static_cast<double>(i + 1);

  GroundTruth truth;
  truth.spec = spec;
  truth.grid = TimeGrid::from_times(times);

  // Loadings from the multiplicative-gamma shrinkage prior.
  Vector vartheta(spec.L);
  for (Index l = 0; l < spec.L; ++l)
    vartheta[l] = rng.gamma(l == 0 ? spec.theta_a1 : spec.theta_a2, 1.0);
  Vector tau(spec.L);
  double prod = 1.0;
  for (Index l = 0; l < spec.L; ++l) tau[l] = (prod *= vartheta[l]);
  truth.theta.resize(spec.p, spec.L);
  for (Index l = 0; l < spec.L; ++l)
    for (Index j = 0; j < spec.p; ++j) {
      const double phi = rng.gamma(1.5, 1.5);
      truth.theta(j, l) = rng.normal() / std::sqrt(phi * tau[l]);
    }

  truth.sigma0_diag.resize(spec.p);
  for (Index j = 0; j < spec.p; ++j)
    truth.sigma0_diag[j] = 1.0 / rng.gamma(spec.idio_shape, spec.idio_rate);

  truth.xi = make_xi(spec, truth.grid.rescaled, rng);
  truth.psi = make_psi(spec, truth.grid.rescaled, rng);
  truth.gamma = compose_truth(truth.theta, truth.sigma0_diag, truth.xi, truth.psi);

  Dataset data = emit_observations(truth, truth.psi, rng);
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, GroundTruth> continue_generate(const Dataset& prev_data,
                                                  const GroundTruth& prev, Index extra_T,
                                                  RngStream& rng) {
  if (extra_T == 0) return {prev_data, prev};
  const Index T0 = prev.grid.size();
  const double spacing =
      T0 > 1 ? prev.grid.raw[T0 - 1] - prev.grid.raw[T0 - 2] : 1.0;

  std::vector<double> times = prev.grid.raw;
  for (Index i = 0; i < extra_T; ++i) times.push_back(times.back() + spacing);

  GroundTruth truth;
  truth.spec = prev.spec;
  truth.grid = TimeGrid::with_affine(times, prev.grid.affine);
  truth.theta = prev.theta;
  truth.sigma0_diag = prev.sigma0_diag;

  const Vector new_pts = truth.grid.rescaled.tail(extra_T);
  const Index LK = prev.xi.rows();
  truth.xi.resize(LK, T0 + extra_T);
  truth.xi.leftCols(T0) = prev.xi;
  for (Index r = 0; r < LK; ++r) {
    if (prev.spec.scenario == ScenarioSpec::Kind::A) {
      truth.xi.row(r).tail(extra_T) = bumps(new_pts, static_cast<int>(r)).transpose();
    } else {
      truth.xi.row(r).tail(extra_T) =
          sample_gp_conditional(prev.grid.rescaled, prev.xi.row(r).transpose(), new_pts,
                                prev.spec.kappa, rng)
              .transpose();
    }
  }
  truth.psi.resize(prev.psi.rows(), T0 + extra_T);
  truth.psi.leftCols(T0) = prev.psi;
  for (Index k = 0; k < prev.psi.rows(); ++k)
    truth.psi.row(k).tail(extra_T) =
        sample_gp_conditional(prev.grid.rescaled, prev.psi.row(k).transpose(), new_pts,
                              prev.spec.kappa, rng)
            .transpose();

  truth.gamma = compose_truth(truth.theta, truth.sigma0_diag, truth.xi, truth.psi);

  // New observations for the extension only; the old block is kept verbatim.
  GroundTruth tail_view = truth;
  tail_view.grid = TimeGrid::with_affine(
      std::vector<double>(times.begin() + T0, times.end()), prev.grid.affine);
  tail_view.xi = truth.xi.rightCols(extra_T);
  Dataset tail = emit_observations(tail_view, truth.psi.rightCols(extra_T), rng);
  return {prev_data.concat(tail), std::move(truth)};
}

}  // namespace ngpf
