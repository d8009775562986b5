#include "ngpf/ngp.hpp"

#include <cmath>

namespace ngpf {

void NgpVariances::validate() const {
  if (sigma2_A.rows() != L() || sigma2_A.cols() != K())
    throw DataError("NgpVariances: sigma2_A shape mismatch");
  if (sigma2_psi.size() != K() || sigma2_B.size() != K())
    throw DataError("NgpVariances: psi/B length mismatch");
  if (L() < 1 || K() < 1) throw DataError("NgpVariances: empty");
  if (sigma2_xi.minCoeff() <= 0 || sigma2_A.minCoeff() <= 0 ||
      sigma2_psi.minCoeff() <= 0 || sigma2_B.minCoeff() <= 0)
    throw DataError("NgpVariances: all variances must be strictly positive");
}

NgpVariances NgpVariances::constant(Index L, Index K, double v_xi, double v_A,
                                    double v_psi, double v_B) {
  NgpVariances v;
  v.sigma2_xi = Matrix::Constant(L, K, v_xi);
  v.sigma2_A = Matrix::Constant(L, K, v_A);
  v.sigma2_psi = Vector::Constant(K, v_psi);
  v.sigma2_B = Vector::Constant(K, v_B);
  return v;
}

DictionaryPaths DictionaryPaths::zeros(Index L, Index K, Index T) {
  DictionaryPaths p;
  p.L = L;
  p.K = K;
  p.xi = Matrix::Zero(L * K, T);
  p.xi_deriv = Matrix::Zero(L * K, T);
  p.A = Matrix::Zero(L * K, T);
  p.psi = Matrix::Zero(K, T);
  p.psi_deriv = Matrix::Zero(K, T);
  p.B = Matrix::Zero(K, T);
  return p;
}

void DictionaryPaths::validate() const {
  const Index t = T();
  if (xi.rows() != L * K || xi_deriv.rows() != L * K || A.rows() != L * K ||
      psi.rows() != K || psi_deriv.rows() != K || B.rows() != K)
    throw DataError("DictionaryPaths: row counts inconsistent with L, K");
  if (xi_deriv.cols() != t || A.cols() != t || psi.cols() != t ||
      psi_deriv.cols() != t || B.cols() != t)
    throw DataError("DictionaryPaths: step counts inconsistent");
  if (!xi.allFinite() || !xi_deriv.allFinite() || !A.allFinite() ||
      !psi.allFinite() || !psi_deriv.allFinite() || !B.allFinite())
    throw DataError("DictionaryPaths: non-finite values");
}

NgpTransitionBlock ngp_transition_block(double delta) {
  if (!(delta > 0)) throw DataError("ngp_transition_block: delta must be positive");
  NgpTransitionBlock b;
  b.transition << 1, delta, 0,
                  0, 1, delta,
                  0, 0, 1;
  b.noise_loading << 0, 0,
                     1, 0,
                     0, 1;
  return b;
}

namespace {

// Stacked [values; derivatives; accel] transition for `blocks` independent
// scalar nGP elements sharing a spacing delta.
void stacked_transition(Index blocks, double delta, const Vector& sigma2_value,
                        const Vector& sigma2_accel, Matrix& transition,
                        Matrix& loading, Vector& noise_diag) {
  if (!(delta > 0)) throw DataError("nGP transition: delta must be positive");
  const Index d = 3 * blocks;
  transition = Matrix::Identity(d, d);
  transition.block(0, blocks, blocks, blocks) =
      Matrix::Identity(blocks, blocks) * delta;
  transition.block(blocks, 2 * blocks, blocks, blocks) =
      Matrix::Identity(blocks, blocks) * delta;
  loading = Matrix::Zero(d, 2 * blocks);
  loading.block(blocks, 0, 2 * blocks, 2 * blocks) =
      Matrix::Identity(2 * blocks, 2 * blocks);
  noise_diag.resize(2 * blocks);
  noise_diag.head(blocks) = sigma2_value * delta;
  noise_diag.tail(blocks) = sigma2_accel * delta;
}

}  // namespace

void xi_transition_step(Index L, Index K, double delta, const NgpVariances& vars,
                        Matrix& transition, Matrix& loading, Vector& noise_diag) {
  const Vector v_xi = Eigen::Map<const Vector>(vars.sigma2_xi.data(), L * K);
  const Vector v_a = Eigen::Map<const Vector>(vars.sigma2_A.data(), L * K);
  stacked_transition(L * K, delta, v_xi, v_a, transition, loading, noise_diag);
}

void psi_transition_step(Index K, double delta, const NgpVariances& vars,
                         Matrix& transition, Matrix& loading, Vector& noise_diag) {
  stacked_transition(K, delta, vars.sigma2_psi, vars.sigma2_B, transition, loading,
                     noise_diag);
}

StateSpaceSystem assemble_xi_system(const Matrix& theta, const Matrix& eta,
                                    const TimeGrid& grid, const NgpVariances& vars,
                                    const Vector& sigma0_diag, double init_var_value,
                                    double init_var_accel) {
  vars.validate();
  const Index p = theta.rows();
  const Index L = vars.L();
  const Index K = vars.K();
  const Index T = grid.size();
  if (theta.cols() != L) throw DataError("assemble_xi_system: theta columns != L");
  if (eta.rows() != K || eta.cols() != T)
    throw DataError("assemble_xi_system: eta must be K x T");
  if (sigma0_diag.size() != p)
    throw DataError("assemble_xi_system: sigma0 length != p");

  StateSpaceSystem sys;
  sys.n_steps = T;
  sys.state_dim = 3 * L * K;
  sys.obs_dim = p;
  sys.noise_dim = 2 * L * K;
  sys.Z.resize(T);
  sys.H.assign(T, Matrix(sigma0_diag.asDiagonal()));
  for (Index i = 0; i < T; ++i) {
    // [eta_i' kron theta, 0]: block k of the leading LK columns is eta(k,i)*theta.
    Matrix z = Matrix::Zero(p, sys.state_dim);
    for (Index k = 0; k < K; ++k)
      z.block(0, k * L, p, L) = eta(k, i) * theta;
    sys.Z[i] = std::move(z);
  }
  sys.T.resize(T - 1);
  sys.R.resize(T - 1);
  sys.q.resize(T - 1);
  for (Index i = 0; i + 1 < T; ++i)
    xi_transition_step(L, K, grid.deltas[i], vars, sys.T[i], sys.R[i], sys.q[i]);
  sys.a1 = Vector::Zero(sys.state_dim);
  Vector p1 = Vector::Constant(sys.state_dim, init_var_value);
  p1.tail(L * K).setConstant(init_var_accel);
  sys.P1 = p1.asDiagonal();
  return sys;
}

StateSpaceSystem assemble_psi_system(const Matrix& theta, const Matrix& xi_flat,
                                     const TimeGrid& grid, const NgpVariances& vars,
                                     const Vector& sigma0_diag, double init_var_value,
                                     double init_var_accel) {
  vars.validate();
  const Index p = theta.rows();
  const Index L = vars.L();
  const Index K = vars.K();
  const Index T = grid.size();
  if (theta.cols() != L) throw DataError("assemble_psi_system: theta columns != L");
  if (xi_flat.rows() != L * K || xi_flat.cols() != T)
    throw DataError("assemble_psi_system: xi must be (L*K) x T");
  if (sigma0_diag.size() != p)
    throw DataError("assemble_psi_system: sigma0 length != p");

  StateSpaceSystem sys;
  sys.n_steps = T;
  sys.state_dim = 3 * K;
  sys.obs_dim = p;
  sys.noise_dim = 2 * K;
  sys.Z.resize(T);
  sys.H.resize(T);
  for (Index i = 0; i < T; ++i) {
    const Eigen::Map<const Matrix> xi_i(xi_flat.col(i).data(), L, K);
    const Matrix lambda = theta * xi_i;  // p x K
    Matrix z = Matrix::Zero(p, sys.state_dim);
    z.leftCols(K) = lambda;
    sys.Z[i] = std::move(z);
    Matrix h = lambda * lambda.transpose();
    h.diagonal() += sigma0_diag;
    sys.H[i] = std::move(h);
  }
  sys.T.resize(T - 1);
  sys.R.resize(T - 1);
  sys.q.resize(T - 1);
  for (Index i = 0; i + 1 < T; ++i)
    psi_transition_step(K, grid.deltas[i], vars, sys.T[i], sys.R[i], sys.q[i]);
  sys.a1 = Vector::Zero(sys.state_dim);
  Vector p1 = Vector::Constant(sys.state_dim, init_var_value);
  p1.tail(K).setConstant(init_var_accel);
  sys.P1 = p1.asDiagonal();
  return sys;
}

}  // namespace ngpf
