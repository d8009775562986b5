#pragma once

// Brute-force joint-Gaussian reference for small state-space systems: builds
// the full covariance of the stacked states explicitly and conditions on the
// unmasked observations with dense linear algebra. Kept deliberately
// independent of the filtering code paths it is used to check.

#include "ngpf/statespace.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ngpf::testing {

struct JointGaussian {
  Vector mean;
  Matrix cov;
};

// Joint law of [x_1; ...; x_n].
inline JointGaussian joint_states(const StateSpaceSystem& sys) {
  const Index n = sys.n_steps;
  const Index d = sys.state_dim;
  JointGaussian joint;
  joint.mean = Vector::Zero(n * d);
  joint.cov = Matrix::Zero(n * d, n * d);

  joint.mean.segment(0, d) = sys.a1;
  for (Index i = 0; i + 1 < n; ++i)
    joint.mean.segment((i + 1) * d, d) = sys.T[i] * joint.mean.segment(i * d, d);

  joint.cov.block(0, 0, d, d) = sys.P1;
  for (Index i = 0; i + 1 < n; ++i) {
    // Cross blocks with every earlier step, then the next diagonal block.
    for (Index j = 0; j <= i; ++j) {
      const Matrix cross = sys.T[i] * joint.cov.block(i * d, j * d, d, d);
      joint.cov.block((i + 1) * d, j * d, d, d) = cross;
      joint.cov.block(j * d, (i + 1) * d, d, d) = cross.transpose();
    }
    Matrix diag = sys.T[i] * joint.cov.block(i * d, i * d, d, d) * sys.T[i].transpose();
    diag.noalias() += sys.R[i] * sys.q[i].asDiagonal() * sys.R[i].transpose();
    joint.cov.block((i + 1) * d, (i + 1) * d, d, d) = diag;
  }
  return joint;
}

struct ObservationStack {
  Matrix design;  // m_total x (n*d)
  Matrix noise;   // m_total x m_total, block diagonal
  Vector y;
};

// Stacks the unmasked observation rows of steps [0, upto) (all steps when
// upto < 0).
inline ObservationStack stack_observations(const StateSpaceSystem& sys,
                                           const ObservationSequence& obs,
                                           Index upto = -1) {
  const Index n = upto < 0 ? sys.n_steps : upto;
  const Index d = sys.state_dim;
  std::vector<std::pair<Index, Index>> rows;  // (step, obs row)
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < sys.obs_dim; ++j)
      if (obs.mask(j, i)) rows.emplace_back(i, j);

  ObservationStack s;
  const Index m = static_cast<Index>(rows.size());
  s.design = Matrix::Zero(m, sys.n_steps * d);
  s.noise = Matrix::Zero(m, m);
  s.y = Vector::Zero(m);
  for (Index r = 0; r < m; ++r) {
    const auto [i, j] = rows[r];
    s.design.block(r, i * d, 1, d) = sys.Z[i].row(j);
    s.y[r] = obs.y(j, i);
    for (Index r2 = 0; r2 < m; ++r2) {
      const auto [i2, j2] = rows[r2];
      if (i2 == i) s.noise(r, r2) = sys.H[i](j, j2);
    }
  }
  return s;
}

struct ConditionedStates {
  Vector mean;    // n*d
  Matrix cov;     // n*d x n*d
  double loglik;  // log density of the stacked observations
};

inline ConditionedStates condition_on_observations(const StateSpaceSystem& sys,
                                                   const ObservationSequence& obs,
                                                   Index upto = -1) {
  const JointGaussian prior = joint_states(sys);
  const ObservationStack s = stack_observations(sys, obs, upto);
  ConditionedStates out;
  if (s.y.size() == 0) {
    out.mean = prior.mean;
    out.cov = prior.cov;
    out.loglik = 0.0;
    return out;
  }
  const Matrix cross = prior.cov * s.design.transpose();           // nd x m
  Matrix yy = s.design * cross + s.noise;                          // m x m
  yy = ((yy + yy.transpose()) * 0.5).eval();
  const Vector ymean = s.design * prior.mean;
  const Eigen::LDLT<Matrix> ldlt(yy);
  const Vector resid = s.y - ymean;
  out.mean = prior.mean + cross * ldlt.solve(resid);
  out.cov = prior.cov - cross * ldlt.solve(cross.transpose());
  out.cov = ((out.cov + out.cov.transpose()) * 0.5).eval();
  double logdet = 0.0;
  const Vector dv = ldlt.vectorD();
  for (Index i = 0; i < dv.size(); ++i) logdet += std::log(dv[i]);
  out.loglik = -0.5 * (s.y.size() * std::log(2.0 * std::numbers::pi) + logdet +
                       resid.dot(ldlt.solve(resid)));
  return out;
}

// Conditional of an arbitrary sub-vector given others within one joint normal.
inline std::pair<Vector, Matrix> partition_condition(const Vector& mean, const Matrix& cov,
                                                     const std::vector<int>& keep,
                                                     const std::vector<int>& given,
                                                     const Vector& given_values) {
  const Matrix c_kg = cov(keep, given);
  const Matrix c_gg = cov(given, given);
  const Eigen::LDLT<Matrix> ldlt(c_gg);
  const Vector adj = given_values - mean(given);
  Vector m = mean(keep) + c_kg * ldlt.solve(adj);
  Matrix c = cov(keep, keep) - c_kg * ldlt.solve(c_kg.transpose());
  return {std::move(m), std::move(c)};
}

}  // namespace ngpf::testing
