#pragma once

#include "ngpf/ngp.hpp"
#include "ngpf/rng.hpp"
#include "ngpf/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ngpf {

/// Prior hyperparameters, truncation levels and MCMC controls. Defaults are
/// the locally-adaptive simulation setup: InvGa(2,1e8) on the loadings
/// dictionary innovation variances, InvGa(0.005,0.005) on the mean dictionary
/// ones, Ga(1,0.1) idiosyncratic precisions, Ga(2,1) column shrinkage, and
/// diffuse-but-proper initial states (variance 100).
struct FitConfig {
  Index p = 0;       // series count; 0 = infer from data
  Index L_star = 2;  // loadings-dictionary truncation
  Index K_star = 2;  // factor-dictionary truncation

  double a_xi = 2.0;
  double b_xi = 1e8;
  double a_A = 2.0;
  double b_A = 1e8;
  double a_psi = 0.005;
  double b_psi = 0.005;
  double a_B = 0.005;
  double b_B = 0.005;

  double a1 = 2.0;  // gamma shape of the first column-shrinkage factor
  double a2 = 2.0;  // gamma shape of the remaining factors

  double a_sigma = 1.0;  // Ga(a_sigma, b_sigma) on idiosyncratic precisions
  double b_sigma = 0.1;

  double sigma2_mu = 100.0;      // initial variance, xi values/derivatives
  double sigma2_alpha = 100.0;   // initial variance, xi accel means
  double sigma2_mu_k = 100.0;    // initial variance, psi values/derivatives
  double sigma2_alpha_k = 100.0; // initial variance, psi slope means

  Index n_iter = 5000;
  Index burn_in = 1000;
  Index thin = 1;
  std::uint64_t seed = 1;

  static const std::vector<std::string>& field_names();
};

/// Violated invariants, one message per offending field; empty means valid.
std::vector<std::string> validate_config(const FitConfig& cfg);
void throw_if_invalid(const FitConfig& cfg);

/// Constant loadings matrix with its multiplicative-gamma shrinkage state:
/// local precisions phi, column factors vartheta, and the cumulative products
/// tau (always recomputed from vartheta, never patched in place).
struct Loadings {
  Matrix theta;     // p x L
  Matrix phi;       // p x L, local precisions
  Vector vartheta;  // L, column shrinkage factors
  Vector tau;       // L, running products of vartheta

  void recompute_tau();
};

/// Latent factor state: eta_i = psi(t_i) + nu_i with standard-normal nu_i.
struct FactorState {
  Matrix nu;   // K x T
  Matrix eta;  // K x T
};

/// One Gibbs draw of every sampled quantity.
struct PosteriorDraw {
  Loadings loadings;
  Vector sigma2_idio;  // p, diagonal of Sigma0
  DictionaryPaths dict;
  FactorState factors;
  NgpVariances ngp_vars;
};

/// Composed mean/covariance path: mu(t_i) (p x T) and Sigma(t_i) per step.
struct MeanCovPath {
  Matrix mu;                 // p x T
  std::vector<Matrix> sigma; // T matrices, p x p

  Index series_count() const { return mu.rows(); }
  Index step_count() const { return mu.cols(); }
};

/// mu(t_i) = theta xi(t_i) psi(t_i), Sigma(t_i) = theta xi(t_i) xi(t_i)'
/// theta' + diag(sigma2_idio), for every grid point.
MeanCovPath compose_mean_cov(const PosteriorDraw& draw, const TimeGrid& grid);

}  // namespace ngpf
