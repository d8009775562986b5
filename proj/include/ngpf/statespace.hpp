#pragma once

#include "ngpf/rng.hpp"
#include "ngpf/types.hpp"

#include <vector>

namespace ngpf {

/// Time-varying linear-Gaussian state-space model
///
///   y_i = Z_i x_i + eps_i,        eps_i ~ N(0, H_i)
///   x_{i+1} = T_i x_i + R_i w_i,  w_i ~ N(0, diag(q_i))
///   x_1 ~ N(a1, P1)
///
/// Transition entries index the step they leave from, so T, R, q have
/// n_steps-1 entries. State-noise covariances are diagonal by construction
/// here and stored as vectors.
struct StateSpaceSystem {
  Index n_steps = 0;
  Index state_dim = 0;
  Index obs_dim = 0;
  Index noise_dim = 0;

  std::vector<Matrix> Z;  // n_steps, obs_dim x state_dim
  std::vector<Matrix> H;  // n_steps, obs_dim x obs_dim, symmetric PSD
  std::vector<Matrix> T;  // n_steps-1, state_dim x state_dim
  std::vector<Matrix> R;  // n_steps-1, state_dim x noise_dim
  std::vector<Vector> q;  // n_steps-1, noise_dim, nonnegative

  Vector a1;  // state_dim
  Matrix P1;  // state_dim x state_dim, symmetric PSD

  /// Dimension consistency plus symmetry/nonnegativity checks (tolerating
  /// eigenvalue dips of order -1e-10 relative to the trace scale).
  void validate() const;
};

/// Per-step observation vectors with missingness mask; a fully masked step
/// is legal and carries no information.
struct ObservationSequence {
  Matrix y;        // obs_dim x n_steps
  BoolArray mask;  // obs_dim x n_steps, true = observed

  static ObservationSequence fully_observed(Matrix y);
  Index n_steps() const { return y.cols(); }
};

struct SmootherOutput {
  Matrix predicted_mean;  // state_dim x n_steps, E[x_i | y_{1:i-1}]
  Matrix filtered_mean;   // state_dim x n_steps, E[x_i | y_{1:i}]
  Matrix smoothed_mean;   // state_dim x n_steps, E[x_i | y_{1:n}] (smoother only)
  std::vector<Matrix> predicted_cov;
  std::vector<Matrix> filtered_cov;
  std::vector<Matrix> smoothed_cov;
  double loglik = 0.0;    // log density of the unmasked observations
};

/// Forward pass only: predicted/filtered moments and the log-likelihood.
/// Masked observation components are dropped from that step's rows; throws
/// NumericalError naming the step when an innovation covariance is singular.
SmootherOutput kalman_filter(const StateSpaceSystem& sys, const ObservationSequence& obs);

/// Filter plus fixed-interval smoother; smoothed moments are the exact
/// Gaussian conditionals of the states given all unmasked data.
SmootherOutput kalman_smoother(const StateSpaceSystem& sys, const ObservationSequence& obs);

/// One exact draw from p(x_{1:n} | unmasked y), by mean correction: simulate
/// an unconditional path and pseudo-data, smooth both, combine
/// (Durbin & Koopman 2002). Returns state_dim x n_steps. When `loglik` is
/// non-null it receives the observation log-likelihood as a side product.
Matrix simulation_smoother(const StateSpaceSystem& sys, const ObservationSequence& obs,
                           RngStream& rng, double* loglik = nullptr);

/// Unconditional forward simulation of states (used for prior draws and tests).
Matrix simulate_states(const StateSpaceSystem& sys, RngStream& rng);

/// Symmetric PSD square root with negative eigenvalues clamped to zero.
Matrix psd_sqrt(const Matrix& m);

}  // namespace ngpf
