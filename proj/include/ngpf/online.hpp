#pragma once

#include "ngpf/sampler.hpp"

namespace ngpf {

/// Posterior means of the constant parameters plus the final-step state
/// moments, i.e. everything the online pass keeps fixed. The affine map and
/// the last fitted timestamp carry the fit's time rescaling forward.
struct FixedParams {
  Matrix theta_hat;       // p x L
  Vector sigma0_hat;      // p
  NgpVariances ngp_vars_hat;
  Vector xi_state_mean;   // 3LK, posterior mean of the final xi state
  Matrix xi_state_cov;
  Vector psi_state_mean;  // 3K
  Matrix psi_state_cov;
  TimeGrid::Affine affine;
  double last_fit_time = 0.0;

  Index p() const { return theta_hat.rows(); }
  Index L() const { return theta_hat.cols(); }
  Index K() const { return ngp_vars_hat.K(); }
  void validate() const;
};

/// Elementwise posterior means over the retained draws; state moments use the
/// sample covariance (denominator n-1) of the final-step states.
FixedParams extract_fixed_params(const Chain& chain);

struct OnlineResult {
  Chain chain;          // draws over the whole processed window
  Index new_begin = 0;  // first window index belonging to the new data
};

/// Online pass with parameters frozen at `fixed`: alternates xi-smoother,
/// psi-smoother and factor updates over warm_tail ++ new_data. With a
/// nonempty warm tail the smoother starts there from a diffuse-proper prior
/// (cfg initial-state variances); with an empty tail it starts at the first
/// new step from the one-step-ahead predictive of the fitted final state.
/// Iteration counts come from cfg (n_iter, burn_in, thin).
OnlineResult online_update(const FixedParams& fixed, const Dataset& new_data,
                           const Dataset& warm_tail, const FitConfig& cfg,
                           RngStream& rng);

struct PredictResult {
  OnlineResult online;
  std::vector<Matrix> y_draws;  // one p x H matrix per retained draw
  std::vector<double> horizon_times;
};

/// h-step-ahead prediction: appends `horizon` fully masked steps after the
/// warm tail and runs the online pass, so the masked steps contribute nothing
/// to any likelihood. Per retained draw, predictive observations are sampled
/// from N(mu(t), Sigma(t)) at each horizon step.
PredictResult predict(const FixedParams& fixed, const Dataset& history_tail,
                      Index horizon, const FitConfig& cfg, RngStream& rng,
                      double future_spacing = 0.0);

/// New fixed-parameter snapshot after an online pass: same constants, state
/// moments and last timestamp advanced to the end of the processed window.
FixedParams refresh_fixed_params(const FixedParams& fixed, const OnlineResult& result);

/// E[y_j | y_{-j}] under N(mu, sigma); y_others holds the other components in
/// index order with j removed.
double gaussian_conditional_mean(const Vector& mu, const Matrix& sigma, Index j,
                                 const Vector& y_others);

/// Rolling one-step-ahead comparison over realized future observations:
/// (a) predicting zero, (b) the predictive mean, (c) the conditional mean
/// given the other series' realized values. Entries at unobserved realized
/// cells are NaN.
struct OneStepErrors {
  Matrix err_a, err_b, err_c;  // p x n_steps
};
OneStepErrors one_step_prediction_errors(const FixedParams& fixed,
                                         const Dataset& history_tail,
                                         const Dataset& realized, Index warm_k,
                                         const FitConfig& cfg, RngStream& rng);

}  // namespace ngpf
