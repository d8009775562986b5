#include "ngpf/sampler.hpp"

#include "support/density_oracle.hpp"
#include "support/gaussian_oracle.hpp"
#include "support/random_systems.hpp"

#include <doctest.h>

#include <cmath>

using namespace ngpf;
using namespace ngpf::testing;

namespace {

Dataset small_dataset(Index p, Index T, RngStream& rng, double mask_prob = 0.0) {
  std::vector<double> times(T);
  for (Index i = 0; i < T; ++i) times[i] = static_cast<double>(i + 1);
  Dataset d = Dataset::fully_observed(times, random_matrix(p, T, rng));
  if (mask_prob > 0.0)
    for (Index i = 0; i < T; ++i)
      for (Index j = 0; j < p; ++j)
        if (rng.uniform() < mask_prob) d.mask(j, i) = false;
  return d;
}

FitConfig small_config(Index p, Index L = 2, Index K = 2) {
  FitConfig cfg;
  cfg.p = p;
  cfg.L_star = L;
  cfg.K_star = K;
  cfg.n_iter = 10;
  cfg.burn_in = 2;
  cfg.thin = 1;
  cfg.seed = 11;
  return cfg;
}

PosteriorDraw draw_for(const FitConfig& cfg, const Dataset& data, std::uint64_t seed) {
  RngStream rng(seed);
  return init_chain(cfg, data, rng);
}

}  // namespace

TEST_CASE("init_chain is deterministic and uses prior means for variances") {
  RngStream data_rng(1);
  const Dataset data = small_dataset(3, 8, data_rng);
  FitConfig cfg = small_config(3);
  cfg.a_xi = 2.0;
  cfg.b_xi = 1e8;
  cfg.a_psi = 0.005;  // shape <= 1 falls back to 1

  const PosteriorDraw a = draw_for(cfg, data, 5);
  const PosteriorDraw b = draw_for(cfg, data, 5);
  CHECK((a.loadings.theta - b.loadings.theta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.factors.nu - b.factors.nu).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.ngp_vars.sigma2_xi(0, 0) == doctest::Approx(1e8));
  CHECK(a.ngp_vars.sigma2_psi[0] == doctest::Approx(1.0));
  CHECK(a.dict.xi.cwiseAbs().maxCoeff() == 0.0);

  // All-zero dictionary composes to the idiosyncratic covariance.
  const TimeGrid grid = TimeGrid::from_times(data.times);
  const MeanCovPath path = compose_mean_cov(a, grid);
  for (const Matrix& s : path.sigma)
    CHECK((s - Matrix(a.sigma2_idio.asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("xi variance conditional: zero increments recover the prior scale") {
  RngStream rng(2);
  const Dataset data = small_dataset(2, 5, rng);
  const FitConfig cfg = small_config(2, 1, 1);
  PosteriorDraw d = draw_for(cfg, data, 3);
  d.dict.xi_deriv.setConstant(0.7);  // constant derivative, zero accel
  d.dict.A.setZero();
  const TimeGrid grid = TimeGrid::from_times(data.times);
  const auto [shape, scale] = deriv_variance_conditional(
      d.dict.xi_deriv, d.dict.A, 0, grid.deltas, cfg.a_xi, cfg.b_xi);
  CHECK(shape == doctest::Approx(cfg.a_xi + 0.5 * (5 - 1)));
  CHECK(scale == doctest::Approx(cfg.b_xi));
}

TEST_CASE("xi variance conditional: hand-evaluated two-step sum") {
  // T = 2, delta = 1, derivative goes 0 -> 1 with zero accel: scale gains 1/2.
  Matrix deriv(1, 2), accel(1, 2);
  deriv << 0.0, 1.0;
  accel << 0.0, 0.0;
  Vector deltas(1);
  deltas << 1.0;
  const auto [shape, scale] = deriv_variance_conditional(deriv, accel, 0, deltas, 2.0, 3.0);
  CHECK(shape == doctest::Approx(2.5));
  CHECK(scale == doctest::Approx(3.5));
}

TEST_CASE("variance conditionals match the grid-integration oracle") {
  RngStream rng(17);
  const Index T = 6;
  Vector deltas(T - 1);
  for (Index i = 0; i < T - 1; ++i) deltas[i] = 0.05 + 0.1 * rng.uniform();
  Matrix deriv = random_matrix(1, T, rng);
  Matrix accel = 0.3 * random_matrix(1, T, rng);
  const double a = 2.2, b = 1.7;

  SUBCASE("derivative-innovation variance") {
    const auto [shape, scale] =
        deriv_variance_conditional(deriv, accel, 0, deltas, a, b);
    auto log_unnorm = [&](double v) {
      double lp = log_inv_gamma_pdf(v, a, b);
      for (Index i = 0; i + 1 < T; ++i) {
        const double inc = deriv(0, i + 1) - deriv(0, i) - accel(0, i) * deltas[i];
        lp += log_normal_pdf(inc, 0.0, v * deltas[i]);
      }
      return lp;
    };
    auto candidate = [&, s = shape, sc = scale](double v) {
      return std::exp(log_inv_gamma_pdf(v, s, sc));
    };
    const double mode = scale / (shape + 1.0);
    const Vector grid = log_spaced_grid(mode, 300.0, 40001);
    CHECK(grid_density_distance(grid, log_unnorm, candidate) < 1e-6);
  }

  SUBCASE("accel-innovation variance") {
    const auto [shape, scale] = accel_variance_conditional(accel, 0, deltas, a, b);
    auto log_unnorm = [&](double v) {
      double lp = log_inv_gamma_pdf(v, a, b);
      for (Index i = 0; i + 1 < T; ++i)
        lp += log_normal_pdf(accel(0, i + 1) - accel(0, i), 0.0, v * deltas[i]);
      return lp;
    };
    auto candidate = [&, s = shape, sc = scale](double v) {
      return std::exp(log_inv_gamma_pdf(v, s, sc));
    };
    const double mode = scale / (shape + 1.0);
    const Vector grid = log_spaced_grid(mode, 300.0, 40001);
    CHECK(grid_density_distance(grid, log_unnorm, candidate) < 1e-6);
  }
}

TEST_CASE("factor conditional: zero dictionary restores the prior") {
  RngStream rng(9);
  const Dataset data = small_dataset(3, 4, rng);
  const FitConfig cfg = small_config(3);
  PosteriorDraw d = draw_for(cfg, data, 13);
  d.dict.xi.setZero();
  const GaussianMoments g = nu_conditional(d, data, 1);
  CHECK(g.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("factor conditional: scalar conjugacy") {
  RngStream rng(10);
  Dataset data = small_dataset(1, 1, rng);
  data.values(0, 0) = 2.0;
  const FitConfig cfg = small_config(1, 1, 1);
  PosteriorDraw d = draw_for(cfg, data, 13);
  d.loadings.theta(0, 0) = 1.0;
  d.dict.xi(0, 0) = 1.0;
  d.dict.psi(0, 0) = 0.0;
  d.sigma2_idio[0] = 1.0;
  const GaussianMoments g = nu_conditional(d, data, 0);
  CHECK(g.mean[0] == doctest::Approx(1.0));
  CHECK(g.cov(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("factor conditional: fully missing step restores the prior") {
  RngStream rng(11);
  Dataset data = small_dataset(3, 2, rng);
  data.mask.col(1).setConstant(false);
  const FitConfig cfg = small_config(3);
  const PosteriorDraw d = draw_for(cfg, data, 13);
  const GaussianMoments g = nu_conditional(d, data, 1);
  CHECK(g.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("factor conditional matches brute-force joint conditioning") {
  RngStream rng(12);
  const Index p = 4, L = 2, K = 2;
  Dataset data = small_dataset(p, 3, rng, 0.3);
  const FitConfig cfg = small_config(p, L, K);
  PosteriorDraw d = draw_for(cfg, data, 14);
  d.dict.xi = random_matrix(L * K, 3, rng);
  d.dict.psi = random_matrix(K, 3, rng);

  for (Index i = 0; i < 3; ++i) {
    std::vector<int> observed;
    for (Index j = 0; j < p; ++j)
      if (data.mask(j, i)) observed.push_back(static_cast<int>(j));
    const GaussianMoments g = nu_conditional(d, data, i);
    if (observed.empty()) {
      CHECK(g.mean.cwiseAbs().maxCoeff() == 0.0);
      continue;
    }
    // Joint normal of (nu, ytilde at observed rows).
    const Matrix lambda = d.loadings.theta * d.dict.xi_at(i);
    const Index m = static_cast<Index>(observed.size());
    Matrix joint_cov(K + m, K + m);
    joint_cov.topLeftCorner(K, K) = Matrix::Identity(K, K);
    Matrix x(m, K);
    Vector ytilde(m);
    for (Index r = 0; r < m; ++r) {
      x.row(r) = lambda.row(observed[r]);
      ytilde[r] =
          data.values(observed[r], i) - lambda.row(observed[r]).dot(d.dict.psi.col(i));
    }
    joint_cov.topRightCorner(K, m) = x.transpose();
    joint_cov.bottomLeftCorner(m, K) = x;
    Matrix yy = x * x.transpose();
    for (Index r = 0; r < m; ++r) yy(r, r) += d.sigma2_idio[observed[r]];
    joint_cov.bottomRightCorner(m, m) = yy;

    std::vector<int> keep, given;
    for (Index q = 0; q < K; ++q) keep.push_back(static_cast<int>(q));
    for (Index q = 0; q < m; ++q) given.push_back(static_cast<int>(K + q));
    const auto [mean, cov] = partition_condition(Vector::Zero(K + m), joint_cov, keep,
                                                 given, ytilde);
    CHECK((g.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("idiosyncratic precision conditional") {
  RngStream rng(15);
  Dataset data = small_dataset(1, 1, rng);
  const FitConfig cfg = [] {
    FitConfig c;
    c.p = 1;
    c.L_star = c.K_star = 1;
    c.a_sigma = 2.0;
    c.b_sigma = 0.5;
    return c;
  }();
  PosteriorDraw d = draw_for(cfg, data, 16);

  SUBCASE("perfect fit keeps the prior rate") {
    d.loadings.theta(0, 0) = 1.0;
    d.dict.xi(0, 0) = 1.0;
    d.factors.eta(0, 0) = data.values(0, 0);
    const auto [shape, rate] = sigma_precision_conditional(d, data, cfg, 0);
    CHECK(shape == doctest::Approx(2.5));
    CHECK(rate == doctest::Approx(0.5));
  }

  SUBCASE("single residual of two") {
    d.loadings.theta(0, 0) = 0.0;  // fitted value 0
    data.values(0, 0) = 2.0;
    const auto [shape, rate] = sigma_precision_conditional(d, data, cfg, 0);
    CHECK(shape == doctest::Approx(2.5));
    CHECK(rate == doctest::Approx(0.5 + 2.0));
  }

  SUBCASE("grid-integration oracle over the precision") {
    RngStream rng2(18);
    Dataset data6 = small_dataset(1, 6, rng2);
    FitConfig cfg6 = cfg;
    PosteriorDraw d6 = draw_for(cfg6, data6, 19);
    d6.dict.xi = random_matrix(1, 6, rng2);
    const auto [shape, rate] = sigma_precision_conditional(d6, data6, cfg6, 0);
    auto log_unnorm = [&](double x) {
      double lp = log_gamma_pdf(x, cfg6.a_sigma, cfg6.b_sigma);
      for (Index i = 0; i < 6; ++i) {
        const double fit = d6.loadings.theta.row(0).dot(d6.dict.xi_at(i) *
                                                        d6.factors.eta.col(i));
        lp += log_normal_pdf(data6.values(0, i), fit, 1.0 / x);
      }
      return lp;
    };
    auto candidate = [&, s = shape, r = rate](double x) {
      return std::exp(log_gamma_pdf(x, s, r));
    };
    const Vector grid = linear_grid(50.0 * shape / rate, 400001);
    CHECK(grid_density_distance(grid, log_unnorm, candidate) < 1e-6);
  }
}

TEST_CASE("loadings row conditional") {
  SUBCASE("no information restores the shrinkage prior") {
    RngStream rng(20);
    Dataset data = small_dataset(2, 3, rng);
    const FitConfig cfg = small_config(2);
    PosteriorDraw d = draw_for(cfg, data, 21);
    d.dict.xi.setZero();  // design vanishes
    const GaussianMoments g = theta_row_conditional(d, data, 0);
    CHECK(g.mean.cwiseAbs().maxCoeff() == 0.0);
    const Vector prior_var =
        (d.loadings.phi.row(0).transpose().array() * d.loadings.tau.array())
            .inverse()
            .matrix();
    CHECK((g.cov - Matrix(prior_var.asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("scalar ridge arithmetic") {
    RngStream rng(22);
    Dataset data = small_dataset(1, 1, rng);
    data.values(0, 0) = 3.0;
    const FitConfig cfg = small_config(1, 1, 1);
    PosteriorDraw d = draw_for(cfg, data, 23);
    d.dict.xi(0, 0) = 1.0;
    d.factors.eta(0, 0) = 1.0;  // design x = 1, so sum x^2 = 1, sum xy = 3
    d.sigma2_idio[0] = 1.0;
    d.loadings.phi(0, 0) = 1.0;
    d.loadings.vartheta[0] = 1.0;
    d.loadings.recompute_tau();
    const GaussianMoments g = theta_row_conditional(d, data, 0);
    CHECK(g.mean[0] == doctest::Approx(1.5));
    CHECK(g.cov(0, 0) == doctest::Approx(0.5));
  }

  SUBCASE("matches a dense generalized-ridge oracle") {
    RngStream rng(24);
    const Index p = 3, L = 2, K = 2, T = 7;
    Dataset data = small_dataset(p, T, rng, 0.25);
    const FitConfig cfg = small_config(p, L, K);
    PosteriorDraw d = draw_for(cfg, data, 25);
    d.dict.xi = random_matrix(L * K, T, rng);

    for (Index j = 0; j < p; ++j) {
      const GaussianMoments g = theta_row_conditional(d, data, j);
      // Dense solve: (X'X/s2 + D)^{-1} X'y/s2 over observed cells.
      Matrix xtx = Matrix::Zero(L, L);
      Vector xty = Vector::Zero(L);
      for (Index i = 0; i < T; ++i) {
        if (!data.mask(j, i)) continue;
        const Vector x = d.dict.xi_at(i) * d.factors.eta.col(i);
        xtx += x * x.transpose();
        xty += x * data.values(j, i);
      }
      const double s2 = d.sigma2_idio[j];
      Matrix full = xtx / s2;
      for (Index l = 0; l < L; ++l)
        full(l, l) += d.loadings.phi(j, l) * d.loadings.tau[l];
      const Vector mean = full.ldlt().solve(xty / s2);
      const Matrix cov = full.ldlt().solve(Matrix::Identity(L, L));
      CHECK((g.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((g.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("local shrinkage conditional") {
  RngStream rng(26);
  Dataset data = small_dataset(2, 2, rng);
  const FitConfig cfg = small_config(2);
  PosteriorDraw d = draw_for(cfg, data, 27);

  SUBCASE("zero loading gives the prior") {
    d.loadings.theta(0, 0) = 0.0;
    const auto [shape, rate] = phi_conditional(d, 0, 0);
    CHECK(shape == doctest::Approx(2.0));
    CHECK(rate == doctest::Approx(1.5));
  }

  SUBCASE("unit loading and unit tau") {
    d.loadings.theta(0, 0) = 1.0;
    d.loadings.vartheta.setOnes();
    d.loadings.recompute_tau();
    const auto [shape, rate] = phi_conditional(d, 0, 0);
    CHECK(shape == doctest::Approx(2.0));
    CHECK(rate == doctest::Approx(2.0));
  }

  SUBCASE("grid oracle") {
    const auto [shape, rate] = phi_conditional(d, 1, 1);
    const double theta = d.loadings.theta(1, 1);
    const double tau = d.loadings.tau[1];
    auto log_unnorm = [&](double x) {
      return log_gamma_pdf(x, 1.5, 1.5) + log_normal_pdf(theta, 0.0, 1.0 / (x * tau));
    };
    auto candidate = [&, s = shape, r = rate](double x) {
      return std::exp(log_gamma_pdf(x, s, r));
    };
    const Vector grid = linear_grid(50.0 * shape / rate, 400001);
    CHECK(grid_density_distance(grid, log_unnorm, candidate) < 1e-6);
  }
}

TEST_CASE("global shrinkage conditional") {
  SUBCASE("zero loadings leave the prior rate") {
    RngStream rng(28);
    Dataset data = small_dataset(3, 2, rng);
    const FitConfig cfg = small_config(3);
    PosteriorDraw d = draw_for(cfg, data, 29);
    d.loadings.theta.setZero();
    const auto [shape, rate] = vartheta_conditional(d, cfg, 0);
    CHECK(shape == doctest::Approx(cfg.a1 + 0.5 * 3 * 2));
    CHECK(rate == doctest::Approx(1.0));
  }

  SUBCASE("hand arithmetic with one column") {
    RngStream rng(30);
    Dataset data = small_dataset(1, 2, rng);
    const FitConfig cfg = small_config(1, 1, 1);
    PosteriorDraw d = draw_for(cfg, data, 31);
    d.loadings.theta(0, 0) = std::sqrt(2.0);
    d.loadings.phi(0, 0) = 1.0;  // phi * theta^2 = 2, tau^{(-1)} = 1
    const auto [shape, rate] = vartheta_conditional(d, cfg, 0);
    CHECK(shape == doctest::Approx(cfg.a1 + 0.5));
    CHECK(rate == doctest::Approx(2.0));
  }

  SUBCASE("grid oracle for a middle factor") {
    RngStream rng(32);
    const Index p = 3, L = 3;
    Dataset data = small_dataset(p, 2, rng);
    FitConfig cfg = small_config(p, L, 2);
    PosteriorDraw d = draw_for(cfg, data, 33);
    const Index h = 1;
    const auto [shape, rate] = vartheta_conditional(d, cfg, h);
    auto log_unnorm = [&](double x) {
      double lp = log_gamma_pdf(x, cfg.a2, 1.0);
      for (Index l = 0; l < L; ++l) {
        double tau_l = 1.0;
        for (Index t = 0; t <= l; ++t)
          tau_l *= (t == h) ? x : d.loadings.vartheta[t];
        for (Index j = 0; j < p; ++j)
          lp += log_normal_pdf(d.loadings.theta(j, l), 0.0,
                               1.0 / (d.loadings.phi(j, l) * tau_l));
      }
      return lp;
    };
    auto candidate = [&, s = shape, r = rate](double x) {
      return std::exp(log_gamma_pdf(x, s, r));
    };
    const Vector grid = linear_grid(50.0 * shape / rate, 400001);
    CHECK(grid_density_distance(grid, log_unnorm, candidate) < 1e-6);
  }

  SUBCASE("tau stays the cumulative product after updates") {
    RngStream rng(34);
    Dataset data = small_dataset(2, 6, rng);
    FitConfig cfg = small_config(2, 3, 2);
    cfg.n_iter = 3;
    cfg.burn_in = 0;
    PosteriorDraw d = draw_for(cfg, data, 35);
    RngStream step_rng(36);
    step9_update_vartheta(d, cfg, step_rng);
    double prod = 1.0;
    for (Index l = 0; l < 3; ++l) {
      prod *= d.loadings.vartheta[l];
      CHECK(d.loadings.tau[l] == doctest::Approx(prod));
    }
  }
}

TEST_CASE("run_gibbs bookkeeping and determinism") {
  RngStream rng(40);
  const Dataset data = small_dataset(3, 20, rng);
  FitConfig cfg = small_config(3);
  cfg.n_iter = 10;
  cfg.burn_in = 4;
  cfg.thin = 2;
  cfg.seed = 123;

  const Chain a = run_gibbs(cfg, data);
  CHECK(a.draws.size() == 3);  // floor((10-4)/2)

  const Chain b = run_gibbs(cfg, data);
  REQUIRE(b.draws.size() == a.draws.size());
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    CHECK((a.draws[i].loadings.theta - b.draws[i].loadings.theta).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((a.draws[i].dict.xi - b.draws[i].dict.xi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.draws[i].sigma2_idio - b.draws[i].sigma2_idio).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("progress hook sees every iteration") {
  RngStream rng(41);
  const Dataset data = small_dataset(2, 10, rng);
  FitConfig cfg = small_config(2, 1, 1);
  cfg.n_iter = 5;
  cfg.burn_in = 1;
  Index calls = 0;
  double last_loglik = 0.0;
  GibbsOptions options;
  options.progress = [&](Index iter, double loglik) {
    ++calls;
    CHECK(iter >= 1);
    CHECK(iter <= 5);
    last_loglik = loglik;
  };
  run_gibbs(cfg, data, options);
  CHECK(calls == 5);
  CHECK(std::isfinite(last_loglik));
}

TEST_CASE("with all data missing the sampler reproduces prior moments") {
  const Index p = 2, T = 20;
  std::vector<double> times(T);
  for (Index i = 0; i < T; ++i) times[i] = static_cast<double>(i + 1);
  Dataset data;
  data.times = times;
  data.values = Matrix::Zero(p, T);
  data.mask = BoolArray::Constant(p, T, false);

  FitConfig cfg;
  cfg.p = p;
  cfg.L_star = 1;
  cfg.K_star = 1;
  // Finite-variance hyperparameters so the moment check is meaningful.
  cfg.a_xi = 5.0;  cfg.b_xi = 4.0;   // InvGa(5,4): mean 1, var 1/3
  cfg.a_A = 5.0;   cfg.b_A = 4.0;
  cfg.a_psi = 5.0; cfg.b_psi = 4.0;
  cfg.a_B = 5.0;   cfg.b_B = 4.0;
  cfg.a_sigma = 3.0;
  cfg.b_sigma = 2.0;  // precision Ga(3,2): mean 1.5, var 0.75
  cfg.n_iter = 5000;
  cfg.burn_in = 500;
  cfg.seed = 314;

  const Chain chain = run_gibbs(cfg, data);
  const Index n = static_cast<Index>(chain.draws.size());

  auto batch_check = [&](auto getter, double true_mean, const char* label) {
    Vector series(n);
    for (Index i = 0; i < n; ++i) series[i] = getter(chain.draws[i]);
    const Index n_batches = 20;
    const Index bs = n / n_batches;
    Vector bm(n_batches);
    for (Index b = 0; b < n_batches; ++b)
      bm[b] = series.segment(b * bs, bs).mean();
    const double mean = bm.mean();
    const double se = std::sqrt((bm.array() - mean).square().sum() /
                                (n_batches - 1) / n_batches);
    INFO(label, ": mean ", mean, " true ", true_mean, " se ", se);
    CHECK(std::abs(mean - true_mean) < 3.0 * se);
  };
  batch_check([](const PosteriorDraw& d) { return d.ngp_vars.sigma2_xi(0, 0); }, 1.0,
              "sigma2_xi");
  batch_check([](const PosteriorDraw& d) { return d.ngp_vars.sigma2_B[0]; }, 1.0,
              "sigma2_B");
  batch_check([](const PosteriorDraw& d) { return 1.0 / d.sigma2_idio[0]; }, 1.5,
              "idio precision");
}

TEST_CASE("composed paths are invariant to joint sign flips across a chain") {
  RngStream rng(50);
  const Dataset data = small_dataset(3, 15, rng);
  FitConfig cfg = small_config(3);
  cfg.n_iter = 20;
  cfg.burn_in = 10;
  const Chain chain = run_gibbs(cfg, data);
  for (const PosteriorDraw& d : chain.draws) {
    PosteriorDraw flipped = d;
    flipped.loadings.theta.col(0) *= -1.0;
    for (Index k = 0; k < d.dict.K; ++k)
      flipped.dict.xi.row(0 + k * d.dict.L) *= -1.0;
    const MeanCovPath a = compose_mean_cov(d, chain.grid);
    const MeanCovPath b = compose_mean_cov(flipped, chain.grid);
    CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() < 1e-12);
    for (Index i = 0; i < a.step_count(); ++i)
      CHECK((a.sigma[i] - b.sigma[i]).cwiseAbs().maxCoeff() < 1e-12);
  }
}
