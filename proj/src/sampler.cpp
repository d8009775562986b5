#include "ngpf/sampler.hpp"

#include <chrono>
#include <cmath>

namespace ngpf {

namespace {

// Shape/scale of the InvGamma conditional for one innovation-variance
// parameter, from squared increments scaled by the spacings. The likelihood
// carries one Gaussian term per increment, so the shape gains n_inc/2.
std::pair<double, double> invgamma_posterior(double a, double b, const Vector& sq_over_delta) {
  return {a + 0.5 * static_cast<double>(sq_over_delta.size()), b + 0.5 * sq_over_delta.sum()};
}

Vector deriv_increments(const Matrix& value_deriv, const Matrix& accel, Index row,
                        const Vector& deltas) {
  const Index n = deltas.size();
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double inc =
        value_deriv(row, i + 1) - value_deriv(row, i) - accel(row, i) * deltas[i];
    out[i] = inc * inc / deltas[i];
  }
  return out;
}

Vector accel_increments(const Matrix& accel, Index row, const Vector& deltas) {
  const Index n = deltas.size();
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double inc = accel(row, i + 1) - accel(row, i);
    out[i] = inc * inc / deltas[i];
  }
  return out;
}

ObservationSequence to_obs(const Dataset& data) {
  ObservationSequence obs;
  obs.y = data.values;
  obs.mask = data.mask;
  return obs;
}

// Draw from N(mean, cov) with a PSD-tolerant factor.
Vector draw_gaussian(const GaussianMoments& g, RngStream& rng) {
  Eigen::LLT<Matrix> llt(g.cov);
  if (llt.info() == Eigen::Success)
    return g.mean + Matrix(llt.matrixL()) * rng.normal_vector(g.mean.size());
  return g.mean + psd_sqrt(g.cov) * rng.normal_vector(g.mean.size());
}

}  // namespace

std::pair<double, double> deriv_variance_conditional(const Matrix& deriv,
                                                     const Matrix& accel, Index row,
                                                     const Vector& deltas, double a,
                                                     double b) {
  return invgamma_posterior(a, b, deriv_increments(deriv, accel, row, deltas));
}

std::pair<double, double> accel_variance_conditional(const Matrix& accel, Index row,
                                                     const Vector& deltas, double a,
                                                     double b) {
  return invgamma_posterior(a, b, accel_increments(accel, row, deltas));
}

GaussianMoments nu_conditional(const PosteriorDraw& draw, const Dataset& data,
                               Index step) {
  const Index K = draw.dict.K;
  const Matrix lambda = draw.loadings.theta * draw.dict.xi_at(step);  // p x K
  Matrix prec = Matrix::Identity(K, K);
  Vector rhs = Vector::Zero(K);
  for (Index j = 0; j < data.series_count(); ++j) {
    if (!data.mask(j, step)) continue;
    const double w = 1.0 / draw.sigma2_idio[j];
    const double resid = data.values(j, step) - lambda.row(j).dot(draw.dict.psi.col(step));
    prec.noalias() += w * lambda.row(j).transpose() * lambda.row(j);
    rhs.noalias() += w * resid * lambda.row(j).transpose();
  }
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericalError("factor update: precision factorization failed at step " +
                         std::to_string(step + 1));
  GaussianMoments g;
  g.mean = llt.solve(rhs);
  g.cov = llt.solve(Matrix::Identity(K, K));
  g.cov = ((g.cov + g.cov.transpose()) * 0.5).eval();
  return g;
}

std::pair<double, double> sigma_precision_conditional(const PosteriorDraw& draw,
                                                      const Dataset& data,
                                                      const FitConfig& cfg, Index j) {
  const Index T = data.step_count();
  double ssr = 0.0;
  Index count = 0;
  for (Index i = 0; i < T; ++i) {
    if (!data.mask(j, i)) continue;
    const double fit =
        draw.loadings.theta.row(j).dot(draw.dict.xi_at(i) * draw.factors.eta.col(i));
    const double r = data.values(j, i) - fit;
    ssr += r * r;
    ++count;
  }
  return {cfg.a_sigma + 0.5 * count, cfg.b_sigma + 0.5 * ssr};
}

GaussianMoments theta_row_conditional(const PosteriorDraw& draw, const Dataset& data,
                                      Index j) {
  const Index L = draw.dict.L;
  const Index T = data.step_count();
  const double w = 1.0 / draw.sigma2_idio[j];
  Matrix prec = (draw.loadings.phi.row(j).transpose().array() *
                 draw.loadings.tau.array()).matrix().asDiagonal();
  Vector rhs = Vector::Zero(L);
  for (Index i = 0; i < T; ++i) {
    if (!data.mask(j, i)) continue;
    const Vector x = draw.dict.xi_at(i) * draw.factors.eta.col(i);
    prec.noalias() += w * x * x.transpose();
    rhs.noalias() += w * data.values(j, i) * x;
  }
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericalError("loadings update: precision factorization failed for series " +
                         std::to_string(j + 1));
  GaussianMoments g;
  g.mean = llt.solve(rhs);
  g.cov = llt.solve(Matrix::Identity(L, L));
  g.cov = ((g.cov + g.cov.transpose()) * 0.5).eval();
  return g;
}

std::pair<double, double> phi_conditional(const PosteriorDraw& draw, Index j, Index l) {
  const double t2 = draw.loadings.theta(j, l) * draw.loadings.theta(j, l);
  return {2.0, 0.5 * (3.0 + draw.loadings.tau[l] * t2)};
}

std::pair<double, double> vartheta_conditional(const PosteriorDraw& draw,
                                               const FitConfig& cfg, Index h) {
  const Index p = draw.loadings.theta.rows();
  const Index L = draw.loadings.theta.cols();
  const double shape =
      (h == 0 ? cfg.a1 : cfg.a2) + 0.5 * static_cast<double>(p) * (L - h);
  double rate = 1.0;
  for (Index l = h; l < L; ++l) {
    double tau_minus = 1.0;  // product of vartheta_t for t <= l, t != h
    for (Index t = 0; t <= l; ++t)
      if (t != h) tau_minus *= draw.loadings.vartheta[t];
    const double col_sum =
        (draw.loadings.phi.col(l).array() * draw.loadings.theta.col(l).array().square())
            .sum();
    rate += 0.5 * tau_minus * col_sum;
  }
  return {shape, rate};
}

PosteriorDraw init_chain(const FitConfig& cfg, const Dataset& data, RngStream& rng) {
  const Index p = data.series_count();
  const Index L = cfg.L_star;
  const Index K = cfg.K_star;
  const Index T = data.step_count();

  PosteriorDraw draw;
  draw.loadings.vartheta.resize(L);
  for (Index l = 0; l < L; ++l)
    draw.loadings.vartheta[l] = rng.gamma(l == 0 ? cfg.a1 : cfg.a2, 1.0);
  draw.loadings.recompute_tau();
  draw.loadings.phi.resize(p, L);
  for (Index l = 0; l < L; ++l)
    for (Index j = 0; j < p; ++j) draw.loadings.phi(j, l) = rng.gamma(1.5, 1.5);
  draw.loadings.theta.resize(p, L);
  for (Index l = 0; l < L; ++l)
    for (Index j = 0; j < p; ++j) {
      const double sd = 1.0 / std::sqrt(draw.loadings.phi(j, l) * draw.loadings.tau[l]);
      draw.loadings.theta(j, l) = sd * rng.normal();
    }

  draw.sigma2_idio.resize(p);
  for (Index j = 0; j < p; ++j)
    draw.sigma2_idio[j] = 1.0 / rng.gamma(cfg.a_sigma, cfg.b_sigma);

  draw.dict = DictionaryPaths::zeros(L, K, T);

  draw.factors.nu.resize(K, T);
  for (Index i = 0; i < T; ++i)
    for (Index k = 0; k < K; ++k) draw.factors.nu(k, i) = rng.normal();
  draw.factors.eta = draw.dict.psi + draw.factors.nu;

  auto prior_mean = [](double a, double b) { return a > 1.0 ? b / (a - 1.0) : 1.0; };
  draw.ngp_vars = NgpVariances::constant(L, K, prior_mean(cfg.a_xi, cfg.b_xi),
                                         prior_mean(cfg.a_A, cfg.b_A),
                                         prior_mean(cfg.a_psi, cfg.b_psi),
                                         prior_mean(cfg.a_B, cfg.b_B));
  return draw;
}

double step1_update_xi(PosteriorDraw& draw, const Dataset& data, const TimeGrid& grid,
                       const FitConfig& cfg, RngStream& rng) {
  const StateSpaceSystem sys =
      assemble_xi_system(draw.loadings.theta, draw.factors.eta, grid, draw.ngp_vars,
                         draw.sigma2_idio, cfg.sigma2_mu, cfg.sigma2_alpha);
  double loglik = 0.0;
  const Matrix states = simulation_smoother(sys, to_obs(data), rng, &loglik);
  const Index lk = draw.dict.L * draw.dict.K;
  draw.dict.xi = states.topRows(lk);
  draw.dict.xi_deriv = states.middleRows(lk, lk);
  draw.dict.A = states.bottomRows(lk);
  return loglik;
}

void step2_update_xi_variances(PosteriorDraw& draw, const TimeGrid& grid,
                               const FitConfig& cfg, RngStream& rng) {
  const Index lk = draw.dict.L * draw.dict.K;
  for (Index r = 0; r < lk; ++r) {
    const auto [a_xi, b_xi] = deriv_variance_conditional(
        draw.dict.xi_deriv, draw.dict.A, r, grid.deltas, cfg.a_xi, cfg.b_xi);
    draw.ngp_vars.sigma2_xi(r % draw.dict.L, r / draw.dict.L) = rng.inv_gamma(a_xi, b_xi);
    const auto [a_a, b_a] =
        accel_variance_conditional(draw.dict.A, r, grid.deltas, cfg.a_A, cfg.b_A);
    draw.ngp_vars.sigma2_A(r % draw.dict.L, r / draw.dict.L) = rng.inv_gamma(a_a, b_a);
  }
}

void step3_update_psi(PosteriorDraw& draw, const Dataset& data, const TimeGrid& grid,
                      const FitConfig& cfg, RngStream& rng) {
  const StateSpaceSystem sys =
      assemble_psi_system(draw.loadings.theta, draw.dict.xi, grid, draw.ngp_vars,
                          draw.sigma2_idio, cfg.sigma2_mu_k, cfg.sigma2_alpha_k);
  const Matrix states = simulation_smoother(sys, to_obs(data), rng);
  const Index k = draw.dict.K;
  draw.dict.psi = states.topRows(k);
  draw.dict.psi_deriv = states.middleRows(k, k);
  draw.dict.B = states.bottomRows(k);
  draw.factors.eta = draw.dict.psi + draw.factors.nu;
}

void step4_update_psi_variances(PosteriorDraw& draw, const TimeGrid& grid,
                                const FitConfig& cfg, RngStream& rng) {
  for (Index k = 0; k < draw.dict.K; ++k) {
    const auto [a_p, b_p] = deriv_variance_conditional(
        draw.dict.psi_deriv, draw.dict.B, k, grid.deltas, cfg.a_psi, cfg.b_psi);
    draw.ngp_vars.sigma2_psi[k] = rng.inv_gamma(a_p, b_p);
    const auto [a_b, b_b] =
        accel_variance_conditional(draw.dict.B, k, grid.deltas, cfg.a_B, cfg.b_B);
    draw.ngp_vars.sigma2_B[k] = rng.inv_gamma(a_b, b_b);
  }
}

void step5_update_nu(PosteriorDraw& draw, const Dataset& data, RngStream& rng) {
  const Index T = data.step_count();
  for (Index i = 0; i < T; ++i) {
    draw.factors.nu.col(i) = draw_gaussian(nu_conditional(draw, data, i), rng);
    draw.factors.eta.col(i) = draw.dict.psi.col(i) + draw.factors.nu.col(i);
  }
}

void step6_update_sigma0(PosteriorDraw& draw, const Dataset& data, const FitConfig& cfg,
                         RngStream& rng) {
  for (Index j = 0; j < data.series_count(); ++j) {
    const auto [shape, rate] = sigma_precision_conditional(draw, data, cfg, j);
    draw.sigma2_idio[j] = 1.0 / rng.gamma(shape, rate);
  }
}

void step7_update_theta(PosteriorDraw& draw, const Dataset& data, const FitConfig& cfg,
                        RngStream& rng) {
  (void)cfg;
  for (Index j = 0; j < data.series_count(); ++j)
    draw.loadings.theta.row(j) =
        draw_gaussian(theta_row_conditional(draw, data, j), rng).transpose();
}

void step8_update_phi(PosteriorDraw& draw, RngStream& rng) {
  const Index p = draw.loadings.theta.rows();
  const Index L = draw.loadings.theta.cols();
  for (Index l = 0; l < L; ++l)
    for (Index j = 0; j < p; ++j) {
      const auto [shape, rate] = phi_conditional(draw, j, l);
      draw.loadings.phi(j, l) = rng.gamma(shape, rate);
    }
}

void step9_update_vartheta(PosteriorDraw& draw, const FitConfig& cfg, RngStream& rng) {
  const Index L = draw.loadings.theta.cols();
  for (Index h = 0; h < L; ++h) {
    const auto [shape, rate] = vartheta_conditional(draw, cfg, h);
    draw.loadings.vartheta[h] = rng.gamma(shape, rate);
    draw.loadings.recompute_tau();
  }
}

Chain run_gibbs(const FitConfig& cfg_in, const Dataset& data, RngStream& rng,
                const GibbsOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  data.validate();
  FitConfig cfg = cfg_in;
  if (cfg.p == 0) cfg.p = data.series_count();
  throw_if_invalid(cfg);
  if (cfg.p != data.series_count())
    throw DataError("run_gibbs: config p=" + std::to_string(cfg.p) +
                    " does not match data series count " +
                    std::to_string(data.series_count()));

  const TimeGrid grid = TimeGrid::from_times(data.times);
  PosteriorDraw draw = init_chain(cfg, data, rng);

  Chain chain;
  chain.grid = grid;
  chain.n_iter = cfg.n_iter;
  chain.burn_in = cfg.burn_in;
  chain.thin = cfg.thin;
  chain.seed = cfg.seed;
  chain.draws.reserve((cfg.n_iter - cfg.burn_in) / cfg.thin);

  for (Index iter = 1; iter <= cfg.n_iter; ++iter) {
    const double loglik = step1_update_xi(draw, data, grid, cfg, rng);
    step2_update_xi_variances(draw, grid, cfg, rng);
    step3_update_psi(draw, data, grid, cfg, rng);
    step4_update_psi_variances(draw, grid, cfg, rng);
    step5_update_nu(draw, data, rng);
    step6_update_sigma0(draw, data, cfg, rng);
    step7_update_theta(draw, data, cfg, rng);
    step8_update_phi(draw, rng);
    step9_update_vartheta(draw, cfg, rng);

    if (iter > cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0) {
      chain.draws.push_back(draw);
      if (options.retain_composed) chain.composed.push_back(compose_mean_cov(draw, grid));
    }
    if (options.progress) options.progress(iter, loglik);
  }
  chain.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return chain;
}

Chain run_gibbs(const FitConfig& cfg, const Dataset& data, const GibbsOptions& options) {
  RngStream rng(cfg.seed);
  return run_gibbs(cfg, data, rng, options);
}

}  // namespace ngpf
