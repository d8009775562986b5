#include "ngpf/online.hpp"

#include "ngpf/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace ngpf {

void FixedParams::validate() const {
  const Index lk = L() * K();
  if (sigma0_hat.size() != p()) throw DataError("FixedParams: sigma0 length != p");
  if (sigma0_hat.minCoeff() <= 0)
    throw DataError("FixedParams: idiosyncratic variances must be positive");
  ngp_vars_hat.validate();
  if (xi_state_mean.size() != 3 * lk || xi_state_cov.rows() != 3 * lk ||
      xi_state_cov.cols() != 3 * lk)
    throw DataError("FixedParams: xi state moment shapes inconsistent");
  if (psi_state_mean.size() != 3 * K() || psi_state_cov.rows() != 3 * K() ||
      psi_state_cov.cols() != 3 * K())
    throw DataError("FixedParams: psi state moment shapes inconsistent");
}

namespace {

Vector final_xi_state(const PosteriorDraw& d) {
  const Index lk = d.dict.L * d.dict.K;
  const Index last = d.dict.T() - 1;
  Vector s(3 * lk);
  s << d.dict.xi.col(last), d.dict.xi_deriv.col(last), d.dict.A.col(last);
  return s;
}

Vector final_psi_state(const PosteriorDraw& d) {
  const Index k = d.dict.K;
  const Index last = d.dict.T() - 1;
  Vector s(3 * k);
  s << d.dict.psi.col(last), d.dict.psi_deriv.col(last), d.dict.B.col(last);
  return s;
}

// Streaming mean/covariance accumulator (Welford).
struct MomentAccumulator {
  explicit MomentAccumulator(Index dim)
      : n(0), mean(Vector::Zero(dim)), m2(Matrix::Zero(dim, dim)) {}
  void add(const Vector& x) {
    ++n;
    const Vector d1 = x - mean;
    mean += d1 / static_cast<double>(n);
    m2.noalias() += d1 * (x - mean).transpose();
  }
  Matrix covariance() const {
    if (n < 2) return Matrix::Zero(mean.size(), mean.size());
    Matrix c = m2 / static_cast<double>(n - 1);
    return ((c + c.transpose()) * 0.5).eval();
  }
  Index n;
  Vector mean;
  Matrix m2;
};

}  // namespace

FixedParams extract_fixed_params(const Chain& chain) {
  if (chain.draws.empty()) throw DataError("extract_fixed_params: empty chain");
  const PosteriorDraw& d0 = chain.draws.front();
  const Index L = d0.dict.L;
  const Index K = d0.dict.K;

  FixedParams fp;
  fp.theta_hat = Matrix::Zero(d0.loadings.theta.rows(), L);
  fp.sigma0_hat = Vector::Zero(d0.sigma2_idio.size());
  fp.ngp_vars_hat = NgpVariances::constant(L, K, 0, 0, 0, 0);
  MomentAccumulator xi_acc(3 * L * K), psi_acc(3 * K);

  for (const PosteriorDraw& d : chain.draws) {
    fp.theta_hat += d.loadings.theta;
    fp.sigma0_hat += d.sigma2_idio;
    fp.ngp_vars_hat.sigma2_xi += d.ngp_vars.sigma2_xi;
    fp.ngp_vars_hat.sigma2_A += d.ngp_vars.sigma2_A;
    fp.ngp_vars_hat.sigma2_psi += d.ngp_vars.sigma2_psi;
    fp.ngp_vars_hat.sigma2_B += d.ngp_vars.sigma2_B;
    xi_acc.add(final_xi_state(d));
    psi_acc.add(final_psi_state(d));
  }
  const double n = static_cast<double>(chain.draws.size());
  fp.theta_hat /= n;
  fp.sigma0_hat /= n;
  fp.ngp_vars_hat.sigma2_xi /= n;
  fp.ngp_vars_hat.sigma2_A /= n;
  fp.ngp_vars_hat.sigma2_psi /= n;
  fp.ngp_vars_hat.sigma2_B /= n;
  fp.xi_state_mean = xi_acc.mean;
  fp.xi_state_cov = xi_acc.covariance();
  fp.psi_state_mean = psi_acc.mean;
  fp.psi_state_cov = psi_acc.covariance();
  fp.affine = chain.grid.affine;
  fp.last_fit_time = chain.grid.raw.back();
  fp.validate();
  return fp;
}

namespace {

ObservationSequence window_obs(const Dataset& data) {
  ObservationSequence o;
  o.y = data.values;
  o.mask = data.mask;
  return o;
}

// One-step-ahead predictive moments of a stacked nGP state from its final-
// sample moments.
void predictive_init(const Vector& mean_t, const Matrix& cov_t, const Matrix& transition,
                     const Matrix& loading, const Vector& noise_diag, Vector& a1,
                     Matrix& p1) {
  a1 = transition * mean_t;
  p1 = transition * cov_t * transition.transpose();
  p1.noalias() += loading * noise_diag.asDiagonal() * loading.transpose();
  p1 = ((p1 + p1.transpose()) * 0.5).eval();
}

}  // namespace

OnlineResult online_update(const FixedParams& fixed, const Dataset& new_data,
                           const Dataset& warm_tail, const FitConfig& cfg,
                           RngStream& rng) {
  fixed.validate();
  const Index k = warm_tail.step_count();
  const Dataset window = new_data.step_count() == 0
                             ? warm_tail
                             : (k > 0 ? warm_tail.concat(new_data) : new_data);
  if (window.step_count() == 0) throw DataError("online_update: empty window");
  window.validate();
  if (window.series_count() != fixed.p())
    throw DataError("online_update: data series count does not match fixed params");
  if (k == 0 && !(window.times.front() > fixed.last_fit_time))
    throw DataError("online_update: new data must start after the fitted sample");

  const TimeGrid grid = TimeGrid::with_affine(window.times, fixed.affine);
  const Index L = fixed.L();
  const Index K = fixed.K();
  const Index T = window.step_count();

  // Initial state moments for both smoothers.
  Vector xi_a1, psi_a1;
  Matrix xi_p1, psi_p1;
  if (k > 0) {
    // Data-driven warm start: diffuse but proper prior at the tail start.
    const Index lk = L * K;
    xi_a1 = Vector::Zero(3 * lk);
    Vector v = Vector::Constant(3 * lk, cfg.sigma2_mu);
    v.tail(lk).setConstant(cfg.sigma2_alpha);
    xi_p1 = v.asDiagonal();
    psi_a1 = Vector::Zero(3 * K);
    Vector vp = Vector::Constant(3 * K, cfg.sigma2_mu_k);
    vp.tail(K).setConstant(cfg.sigma2_alpha_k);
    psi_p1 = vp.asDiagonal();
  } else {
    const double delta = grid.rescaled[0] - fixed.affine.apply(fixed.last_fit_time);
    if (!(delta > 0))
      throw DataError("online_update: first new time not after the fitted sample");
    Matrix tr, ld;
    Vector nd;
    xi_transition_step(L, K, delta, fixed.ngp_vars_hat, tr, ld, nd);
    predictive_init(fixed.xi_state_mean, fixed.xi_state_cov, tr, ld, nd, xi_a1, xi_p1);
    psi_transition_step(K, delta, fixed.ngp_vars_hat, tr, ld, nd);
    predictive_init(fixed.psi_state_mean, fixed.psi_state_cov, tr, ld, nd, psi_a1, psi_p1);
  }

  PosteriorDraw draw;
  draw.loadings.theta = fixed.theta_hat;
  draw.loadings.phi = Matrix::Ones(fixed.p(), L);
  draw.loadings.vartheta = Vector::Ones(L);
  draw.loadings.recompute_tau();
  draw.sigma2_idio = fixed.sigma0_hat;
  draw.ngp_vars = fixed.ngp_vars_hat;
  draw.dict = DictionaryPaths::zeros(L, K, T);
  draw.factors.nu.resize(K, T);
  for (Index i = 0; i < T; ++i)
    for (Index kk = 0; kk < K; ++kk) draw.factors.nu(kk, i) = rng.normal();
  draw.factors.eta = draw.dict.psi + draw.factors.nu;

  OnlineResult result;
  result.new_begin = k;
  result.chain.grid = grid;
  result.chain.n_iter = cfg.n_iter;
  result.chain.burn_in = cfg.burn_in;
  result.chain.thin = cfg.thin;
  result.chain.seed = cfg.seed;
  result.chain.draws.reserve((cfg.n_iter - cfg.burn_in) / cfg.thin);

  const ObservationSequence obs = window_obs(window);
  const Index lk = L * K;
  for (Index iter = 1; iter <= cfg.n_iter; ++iter) {
    StateSpaceSystem xi_sys =
        assemble_xi_system(fixed.theta_hat, draw.factors.eta, grid, fixed.ngp_vars_hat,
                           fixed.sigma0_hat, 1.0, 1.0);
    xi_sys.a1 = xi_a1;
    xi_sys.P1 = xi_p1;
    const Matrix xi_states = simulation_smoother(xi_sys, obs, rng);
    draw.dict.xi = xi_states.topRows(lk);
    draw.dict.xi_deriv = xi_states.middleRows(lk, lk);
    draw.dict.A = xi_states.bottomRows(lk);

    StateSpaceSystem psi_sys =
        assemble_psi_system(fixed.theta_hat, draw.dict.xi, grid, fixed.ngp_vars_hat,
                            fixed.sigma0_hat, 1.0, 1.0);
    psi_sys.a1 = psi_a1;
    psi_sys.P1 = psi_p1;
    const Matrix psi_states = simulation_smoother(psi_sys, obs, rng);
    draw.dict.psi = psi_states.topRows(K);
    draw.dict.psi_deriv = psi_states.middleRows(K, K);
    draw.dict.B = psi_states.bottomRows(K);
    draw.factors.eta = draw.dict.psi + draw.factors.nu;

    step5_update_nu(draw, window, rng);

    if (iter > cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0) {
      result.chain.draws.push_back(draw);
      result.chain.composed.push_back(compose_mean_cov(draw, grid));
    }
  }
  return result;
}

PredictResult predict(const FixedParams& fixed, const Dataset& history_tail,
                      Index horizon, const FitConfig& cfg, RngStream& rng,
                      double future_spacing) {
  if (horizon < 1) throw DataError("predict: horizon must be >= 1");
  double spacing = future_spacing;
  if (!(spacing > 0)) {
    const auto& ht = history_tail.times;
    if (ht.size() >= 2)
      spacing = ht.back() - ht[ht.size() - 2];
    else if (ht.size() == 1)
      spacing = ht.front() - fixed.last_fit_time;
    else
      spacing = 1.0;
  }
  const double t0 = history_tail.step_count() > 0 ? history_tail.times.back()
                                                  : fixed.last_fit_time;

  Dataset future;
  future.times.resize(horizon);
  for (Index h = 0; h < horizon; ++h) future.times[h] = t0 + spacing * (h + 1);
  future.values = Matrix::Zero(fixed.p(), horizon);
  future.mask = BoolArray::Constant(fixed.p(), horizon, false);

  PredictResult out;
  out.horizon_times = future.times;
  out.online = online_update(fixed, future, history_tail, cfg, rng);

  const Index first = out.online.chain.grid.size() - horizon;
  out.y_draws.reserve(out.online.chain.draws.size());
  for (const MeanCovPath& path : out.online.chain.composed) {
    Matrix y(fixed.p(), horizon);
    for (Index h = 0; h < horizon; ++h) {
      y.col(h) = path.mu.col(first + h) +
                 psd_sqrt(path.sigma[first + h]) * rng.normal_vector(fixed.p());
    }
    out.y_draws.push_back(std::move(y));
  }
  return out;
}

FixedParams refresh_fixed_params(const FixedParams& fixed, const OnlineResult& result) {
  const Chain& chain = result.chain;
  if (chain.draws.empty()) throw DataError("refresh_fixed_params: empty chain");
  FixedParams fp = fixed;
  MomentAccumulator xi_acc(fixed.xi_state_mean.size());
  MomentAccumulator psi_acc(fixed.psi_state_mean.size());
  for (const PosteriorDraw& d : chain.draws) {
    xi_acc.add(final_xi_state(d));
    psi_acc.add(final_psi_state(d));
  }
  fp.xi_state_mean = xi_acc.mean;
  fp.xi_state_cov = xi_acc.covariance();
  fp.psi_state_mean = psi_acc.mean;
  fp.psi_state_cov = psi_acc.covariance();
  fp.last_fit_time = chain.grid.raw.back();
  return fp;
}

double gaussian_conditional_mean(const Vector& mu, const Matrix& sigma, Index j,
                                 const Vector& y_others) {
  const Index p = mu.size();
  if (sigma.rows() != p || sigma.cols() != p)
    throw DataError("gaussian_conditional_mean: sigma shape mismatch");
  if (y_others.size() != p - 1)
    throw DataError("gaussian_conditional_mean: y_others must have p-1 entries");
  if (p == 1) return mu[0];

  std::vector<int> others;
  others.reserve(p - 1);
  for (Index i = 0; i < p; ++i)
    if (i != j) others.push_back(static_cast<int>(i));

  const Matrix s_oo = sigma(others, others);
  const Vector s_jo = sigma(others, std::vector<int>{static_cast<int>(j)});
  const Vector mu_o = mu(others);
  Eigen::LDLT<Matrix> ldlt(s_oo);
  return mu[j] + s_jo.dot(ldlt.solve(y_others - mu_o));
}

OneStepErrors one_step_prediction_errors(const FixedParams& fixed,
                                         const Dataset& history_tail,
                                         const Dataset& realized, Index warm_k,
                                         const FitConfig& cfg, RngStream& rng) {
  const Index p = fixed.p();
  const Index S = realized.step_count();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  OneStepErrors out;
  out.err_a = Matrix::Constant(p, S, nan);
  out.err_b = Matrix::Constant(p, S, nan);
  out.err_c = Matrix::Constant(p, S, nan);

  Dataset known = history_tail;
  for (Index s = 0; s < S; ++s) {
    const Index avail = known.step_count();
    const Index k = std::min(warm_k, avail);
    const Dataset tail = known.slice_steps(avail - k, k);

    PredictResult pred = predict(fixed, tail, 1, cfg, rng);
    const Index step = pred.online.chain.grid.size() - 1;

    // Posterior means of the one-step-ahead mu and Sigma.
    Vector mu_hat = Vector::Zero(p);
    Matrix sigma_hat = Matrix::Zero(p, p);
    for (const MeanCovPath& path : pred.online.chain.composed) {
      mu_hat += path.mu.col(step);
      sigma_hat += path.sigma[step];
    }
    const double n = static_cast<double>(pred.online.chain.composed.size());
    mu_hat /= n;
    sigma_hat /= n;

    for (Index j = 0; j < p; ++j) {
      if (!realized.mask(j, s)) continue;
      const double y = realized.values(j, s);
      out.err_a(j, s) = 0.0 - y;
      out.err_b(j, s) = mu_hat[j] - y;
      // Conditional mean needs the other components' realized values.
      bool others_ok = true;
      Vector y_others(p - 1);
      Index idx = 0;
      for (Index q = 0; q < p; ++q) {
        if (q == j) continue;
        if (!realized.mask(q, s)) {
          others_ok = false;
          break;
        }
        y_others[idx++] = realized.values(q, s);
      }
      if (others_ok && p > 1)
        out.err_c(j, s) = gaussian_conditional_mean(mu_hat, sigma_hat, j, y_others) - y;
    }

    known = known.concat(realized.slice_steps(s, 1));
  }
  return out;
}

}  // namespace ngpf
