#include "ngpf/ngp.hpp"

#include "ngpf/model.hpp"
#include "support/random_systems.hpp"

#include <doctest.h>

using namespace ngpf;
using namespace ngpf::testing;

TEST_CASE("transition block at delta = 0.01") {
  const auto block = ngp_transition_block(0.01);
  Eigen::Matrix3d expected;
  expected << 1, 0.01, 0, 0, 1, 0.01, 0, 0, 1;
  CHECK((block.transition - expected).cwiseAbs().maxCoeff() == 0.0);
  Eigen::Matrix<double, 3, 2> loading;
  loading << 0, 0, 1, 0, 0, 1;
  CHECK((block.noise_loading - loading).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transition block approaches identity as delta shrinks") {
  const auto block = ngp_transition_block(1e-12);
  CHECK((block.transition - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() ==
        doctest::Approx(1e-12));
  CHECK_THROWS_AS(ngp_transition_block(0.0), DataError);
  CHECK_THROWS_AS(ngp_transition_block(-1.0), DataError);
}

TEST_CASE("two composed blocks propagate polynomially") {
  const double d1 = 0.3, d2 = 0.45;
  const Eigen::Matrix3d m = ngp_transition_block(d2).transition *
                            ngp_transition_block(d1).transition;
  Eigen::Matrix3d expected;
  expected << 1, d1 + d2, d2 * d1,
              0, 1, d1 + d2,
              0, 0, 1;
  CHECK((m - expected).cwiseAbs().maxCoeff() < 1e-15);
}

namespace {

TimeGrid unit_grid(Index T) {
  std::vector<double> times(T);
  for (Index i = 0; i < T; ++i) times[i] = static_cast<double>(i + 1);
  return TimeGrid::from_times(times);
}

}  // namespace

TEST_CASE("scalar xi system observation row") {
  const TimeGrid grid = unit_grid(3);
  const Matrix theta = Matrix::Constant(1, 1, 2.0);
  const Matrix eta = Matrix::Constant(1, 3, 3.0);
  const NgpVariances vars = NgpVariances::constant(1, 1, 1.0, 1.0, 1.0, 1.0);
  const StateSpaceSystem sys =
      assemble_xi_system(theta, eta, grid, vars, Vector::Ones(1), 100.0, 100.0);
  CHECK(sys.state_dim == 3);
  CHECK(sys.Z[0](0, 0) == doctest::Approx(6.0));
  CHECK(sys.Z[0](0, 1) == 0.0);
  CHECK(sys.Z[0](0, 2) == 0.0);
  CHECK((sys.P1 - 100.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("xi observation rows satisfy the vec identity") {
  RngStream rng(31);
  const Index p = 3, L = 2, K = 2, T = 4;
  const TimeGrid grid = unit_grid(T);
  const Matrix theta = random_matrix(p, L, rng);
  const Matrix eta = random_matrix(K, T, rng);
  const NgpVariances vars = NgpVariances::constant(L, K, 0.5, 0.25, 1.0, 1.0);
  const StateSpaceSystem sys =
      assemble_xi_system(theta, eta, grid, vars, Vector::Ones(p), 100.0, 100.0);

  for (Index i = 0; i < T; ++i) {
    const Matrix xi = random_matrix(L, K, rng);
    Vector state = Vector::Zero(3 * L * K);
    state.head(L * K) = Eigen::Map<const Vector>(xi.data(), L * K);
    const Vector via_obs_row = sys.Z[i] * state;
    const Vector direct = theta * xi * eta.col(i);
    CHECK((via_obs_row - direct).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("xi system dimension checks") {
  const TimeGrid grid = unit_grid(3);
  const NgpVariances vars = NgpVariances::constant(2, 2, 1, 1, 1, 1);
  const Matrix theta = Matrix::Ones(3, 2);
  CHECK_THROWS_AS(assemble_xi_system(theta, Matrix::Ones(3, 3), grid, vars,
                                     Vector::Ones(3), 1, 1),
                  DataError);
  CHECK_THROWS_AS(assemble_xi_system(Matrix::Ones(3, 1), Matrix::Ones(2, 3), grid, vars,
                                     Vector::Ones(3), 1, 1),
                  DataError);
}

TEST_CASE("psi system with zero xi reduces to pure noise") {
  const TimeGrid grid = unit_grid(3);
  const Index p = 2, L = 1, K = 1;
  const NgpVariances vars = NgpVariances::constant(L, K, 1, 1, 1, 1);
  const Matrix theta = Matrix::Ones(p, L);
  const Matrix xi = Matrix::Zero(L * K, 3);
  const Vector sigma0 = Vector::Constant(p, 1.5);
  const StateSpaceSystem sys =
      assemble_psi_system(theta, xi, grid, vars, sigma0, 100.0, 100.0);
  CHECK(sys.Z[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK((sys.H[1] - Matrix(sigma0.asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psi system rank-one observation noise") {
  const TimeGrid grid = unit_grid(2);
  const NgpVariances vars = NgpVariances::constant(1, 1, 1, 1, 1, 1);
  const Matrix theta = Matrix::Ones(2, 1);
  const Matrix xi = Matrix::Ones(1, 2);  // theta * xi = (1,1)'
  const StateSpaceSystem sys =
      assemble_psi_system(theta, xi, grid, vars, Vector::Ones(2), 100.0, 100.0);
  Matrix expected(2, 2);
  expected << 2, 1, 1, 2;
  CHECK((sys.H[0] - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psi observation noise equals the composed covariance") {
  RngStream rng(77);
  const Index p = 4, L = 2, K = 3, T = 5;
  const TimeGrid grid = unit_grid(T);
  const NgpVariances vars = NgpVariances::constant(L, K, 1, 1, 1, 1);
  const Matrix theta = random_matrix(p, L, rng);
  const Matrix xi = random_matrix(L * K, T, rng);
  Vector sigma0(p);
  for (Index j = 0; j < p; ++j) sigma0[j] = 0.5 + rng.uniform();

  const StateSpaceSystem sys =
      assemble_psi_system(theta, xi, grid, vars, sigma0, 100.0, 100.0);

  PosteriorDraw draw;
  draw.loadings.theta = theta;
  draw.sigma2_idio = sigma0;
  draw.dict = DictionaryPaths::zeros(L, K, T);
  draw.dict.xi = xi;
  const MeanCovPath path = compose_mean_cov(draw, grid);
  for (Index i = 0; i < T; ++i)
    CHECK((sys.H[i] - path.sigma[i]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembled noise variances are diagonal and nonnegative") {
  RngStream rng(5);
  const TimeGrid grid = unit_grid(6);
  const NgpVariances vars = NgpVariances::constant(2, 3, 0.7, 0.1, 2.0, 0.4);
  const Matrix theta = random_matrix(4, 2, rng);
  const Matrix eta = random_matrix(3, 6, rng);
  const StateSpaceSystem sys =
      assemble_xi_system(theta, eta, grid, vars, Vector::Ones(4), 100.0, 100.0);
  for (const Vector& q : sys.q) {
    CHECK(q.minCoeff() >= 0.0);
    CHECK(q.size() == 2 * 2 * 3);
  }
  // First LK entries carry sigma2_xi * delta, the rest sigma2_A * delta.
  CHECK(sys.q[0][0] == doctest::Approx(0.7 * grid.deltas[0]));
  CHECK(sys.q[0][2 * 3] == doctest::Approx(0.1 * grid.deltas[0]));
}

TEST_CASE("stacked system marginally reproduces each scalar block") {
  // Unconditional covariances of one (l,k) block inside the stacked system
  // match a standalone scalar block at lags 0 and 1.
  const Index L = 2, K = 2, T = 50;
  const TimeGrid grid = unit_grid(T);
  const NgpVariances vars = NgpVariances::constant(L, K, 2.0, 0.5, 1.0, 1.0);
  const Matrix theta = Matrix::Ones(1, L);
  const Matrix eta = Matrix::Zero(K, T);
  StateSpaceSystem stacked =
      assemble_xi_system(theta, eta, grid, vars, Vector::Ones(1), 4.0, 9.0);

  // Scalar block with the same spacings and variances for element (l,k)=(1,1).
  StateSpaceSystem single;
  single.n_steps = T;
  single.state_dim = 3;
  single.obs_dim = 1;
  single.noise_dim = 2;
  for (Index i = 0; i < T; ++i) {
    single.Z.push_back(Matrix::Zero(1, 3));
    single.H.push_back(Matrix::Identity(1, 1));
  }
  for (Index i = 0; i + 1 < T; ++i) {
    const auto block = ngp_transition_block(grid.deltas[i]);
    single.T.push_back(block.transition);
    single.R.push_back(block.noise_loading);
    Vector q(2);
    q << 2.0 * grid.deltas[i], 0.5 * grid.deltas[i];
    single.q.push_back(q);
  }
  single.a1 = Vector::Zero(3);
  Vector p1(3);
  p1 << 4.0, 4.0, 9.0;
  single.P1 = p1.asDiagonal();

  const int n_sims = 4000;
  const Index probe = T / 2;
  RngStream rng_a(2024), rng_b(2025);
  auto moments = [&](const StateSpaceSystem& sys, RngStream& rng, Index value_row) {
    double lag0 = 0.0, lag1 = 0.0, m0 = 0.0, m1 = 0.0;
    for (int s = 0; s < n_sims; ++s) {
      const Matrix x = simulate_states(sys, rng);
      const double v0 = x(value_row, probe);
      const double v1 = x(value_row, probe + 1);
      lag0 += v0 * v0;
      lag1 += v0 * v1;
      m0 += v0;
      m1 += v1;
    }
    lag0 /= n_sims;
    lag1 /= n_sims;
    m0 /= n_sims;
    m1 /= n_sims;
    return std::pair{lag0 - m0 * m0, lag1 - m0 * m1};
  };
  const auto [stacked0, stacked1] = moments(stacked, rng_a, 0);
  const auto [single0, single1] = moments(single, rng_b, 0);
  // 3 MC standard errors of a variance estimate ~ var * sqrt(2/n) each side.
  const double tol0 = 3.0 * (stacked0 + single0) * std::sqrt(2.0 / n_sims);
  CHECK(std::abs(stacked0 - single0) < tol0);
  const double tol1 = 3.0 * (std::abs(stacked1) + std::abs(single1) + 1.0) *
                      std::sqrt(2.0 / n_sims);
  CHECK(std::abs(stacked1 - single1) < tol1);
}
