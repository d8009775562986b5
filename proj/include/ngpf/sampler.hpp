#pragma once

#include "ngpf/model.hpp"

#include <functional>
#include <optional>

namespace ngpf {

/// Retained posterior sample: draws kept after burn-in at the configured
/// thinning, optionally with their composed mean/covariance paths.
struct Chain {
  std::vector<PosteriorDraw> draws;
  std::vector<MeanCovPath> composed;  // empty unless retention was requested
  TimeGrid grid;
  Index n_iter = 0;
  Index burn_in = 0;
  Index thin = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

/// Called once per iteration with the xi-system observation log-likelihood.
using ProgressHook = std::function<void(Index iteration, double loglik)>;

/// Iteration-zero state: loadings and idiosyncratic precisions from their
/// priors, dictionary states at zero, standard-normal factor innovations,
/// nGP variances at their prior means (b/(a-1) when a>1, else 1).
PosteriorDraw init_chain(const FitConfig& cfg, const Dataset& data, RngStream& rng);

/// Full-conditional parameters, exposed so the update laws can be checked
/// against independent oracles; the step functions draw from exactly these.
struct GaussianMoments {
  Vector mean;
  Matrix cov;
};

/// InvGamma (shape, scale) for one derivative-innovation variance given the
/// increments deriv(t+1) - deriv(t) - accel(t) * delta.
std::pair<double, double> deriv_variance_conditional(const Matrix& deriv,
                                                     const Matrix& accel, Index row,
                                                     const Vector& deltas, double a,
                                                     double b);
/// InvGamma (shape, scale) for one accel-innovation variance.
std::pair<double, double> accel_variance_conditional(const Matrix& accel, Index row,
                                                     const Vector& deltas, double a,
                                                     double b);
/// Factor innovation nu_i given loadings, dictionary and observed cells.
GaussianMoments nu_conditional(const PosteriorDraw& draw, const Dataset& data,
                               Index step);
/// Gamma (shape, rate) for one idiosyncratic precision.
std::pair<double, double> sigma_precision_conditional(const PosteriorDraw& draw,
                                                      const Dataset& data,
                                                      const FitConfig& cfg, Index j);
/// Loadings row j given factors, dictionary and shrinkage state.
GaussianMoments theta_row_conditional(const PosteriorDraw& draw, const Dataset& data,
                                      Index j);
/// Gamma (shape, rate) for a local shrinkage precision.
std::pair<double, double> phi_conditional(const PosteriorDraw& draw, Index j, Index l);
/// Gamma (shape, rate) for column-shrinkage factor h given the others.
std::pair<double, double> vartheta_conditional(const PosteriorDraw& draw,
                                               const FitConfig& cfg, Index h);

/// The individual Gibbs updates. Each replaces the corresponding part of
/// `draw` with one draw from its full conditional. Step 1 returns the
/// observation log-likelihood of its state-space model as a progress metric.
double step1_update_xi(PosteriorDraw& draw, const Dataset& data, const TimeGrid& grid,
                       const FitConfig& cfg, RngStream& rng);
void step2_update_xi_variances(PosteriorDraw& draw, const TimeGrid& grid,
                               const FitConfig& cfg, RngStream& rng);
void step3_update_psi(PosteriorDraw& draw, const Dataset& data, const TimeGrid& grid,
                      const FitConfig& cfg, RngStream& rng);
void step4_update_psi_variances(PosteriorDraw& draw, const TimeGrid& grid,
                                const FitConfig& cfg, RngStream& rng);
void step5_update_nu(PosteriorDraw& draw, const Dataset& data, RngStream& rng);
void step6_update_sigma0(PosteriorDraw& draw, const Dataset& data,
                         const FitConfig& cfg, RngStream& rng);
void step7_update_theta(PosteriorDraw& draw, const Dataset& data,
                        const FitConfig& cfg, RngStream& rng);
void step8_update_phi(PosteriorDraw& draw, RngStream& rng);
void step9_update_vartheta(PosteriorDraw& draw, const FitConfig& cfg, RngStream& rng);

struct GibbsOptions {
  bool retain_composed = false;
  ProgressHook progress;
};

/// Full sampler: updates in step order 1..9 each iteration, composing the
/// mean/covariance path for retained draws. Deterministic given cfg.seed.
Chain run_gibbs(const FitConfig& cfg, const Dataset& data, RngStream& rng,
                const GibbsOptions& options = {});

/// Convenience overload seeding a stream from cfg.seed.
Chain run_gibbs(const FitConfig& cfg, const Dataset& data,
                const GibbsOptions& options = {});

}  // namespace ngpf
