#pragma once

#include "ngpf/statespace.hpp"
#include "ngpf/types.hpp"

namespace ngpf {

/// State-equation innovation variances of the nested-GP dictionary blocks:
/// one (sigma2_xi, sigma2_accel) pair per loadings-dictionary element and one
/// (sigma2_psi, sigma2_slope) pair per mean-dictionary element.
struct NgpVariances {
  Matrix sigma2_xi;   // L x K
  Matrix sigma2_A;    // L x K
  Vector sigma2_psi;  // K
  Vector sigma2_B;    // K

  Index L() const { return sigma2_xi.rows(); }
  Index K() const { return sigma2_xi.cols(); }
  void validate() const;

  static NgpVariances constant(Index L, Index K, double v_xi, double v_A,
                               double v_psi, double v_B);
};

/// Sampled dictionary trajectories. Loadings-dictionary blocks are stored
/// flattened: column i of `xi` is vec(xi(t_i)) with the row index running
/// fastest, matching the state ordering of the assembled systems.
struct DictionaryPaths {
  Index L = 0;
  Index K = 0;
  Matrix xi;        // (L*K) x T
  Matrix xi_deriv;  // (L*K) x T
  Matrix A;         // (L*K) x T, instantaneous means
  Matrix psi;       // K x T
  Matrix psi_deriv; // K x T
  Matrix B;         // K x T

  Index T() const { return xi.cols(); }

  Eigen::Map<const Matrix> xi_at(Index i) const {
    return Eigen::Map<const Matrix>(xi.col(i).data(), L, K);
  }

  static DictionaryPaths zeros(Index L, Index K, Index T);
  void validate() const;
};

/// Single-element nGP transition over a spacing delta:
/// transition [[1,d,0],[0,1,d],[0,0,1]] on (value, derivative, accel-mean),
/// noise loading [[0,0],[1,0],[0,1]]. The innovation covariance is
/// diag(sigma2_value*delta, sigma2_accel*delta), supplied separately.
struct NgpTransitionBlock {
  Eigen::Matrix3d transition;
  Eigen::Matrix<double, 3, 2> noise_loading;
};
NgpTransitionBlock ngp_transition_block(double delta);

/// State-space model for the stacked loadings-dictionary states
/// [vec(xi); vec(xi'); vec(A)] (dimension 3LK): observation row at step i is
/// [eta_i' kron theta, 0], observation noise diag(sigma0), transitions from
/// the nGP blocks, initial N(0, diag(init_var_value on value/derivative
/// coordinates, init_var_accel on accel coordinates)).
StateSpaceSystem assemble_xi_system(const Matrix& theta, const Matrix& eta,
                                    const TimeGrid& grid, const NgpVariances& vars,
                                    const Vector& sigma0_diag, double init_var_value,
                                    double init_var_accel);

/// State-space model for the mean-dictionary states [psi; psi'; B]
/// (dimension 3K): observation matrix [theta*xi(t_i), 0], per-step observation
/// noise theta*xi(t_i)*xi(t_i)'*theta' + diag(sigma0) (latent factor
/// innovations marginalized out).
StateSpaceSystem assemble_psi_system(const Matrix& theta, const Matrix& xi_flat,
                                     const TimeGrid& grid, const NgpVariances& vars,
                                     const Vector& sigma0_diag, double init_var_value,
                                     double init_var_accel);

/// Stacked transition/loading/noise for one step of the xi system (exposed
/// for the online predictive initialization).
void xi_transition_step(Index L, Index K, double delta, const NgpVariances& vars,
                        Matrix& transition, Matrix& loading, Vector& noise_diag);
void psi_transition_step(Index K, double delta, const NgpVariances& vars,
                         Matrix& transition, Matrix& loading, Vector& noise_diag);

}  // namespace ngpf
