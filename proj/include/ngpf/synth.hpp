#pragma once

#include "ngpf/model.hpp"
#include "ngpf/rng.hpp"

namespace ngpf {

/// Synthetic designs: scenario A uses bumps dictionary functions with locally
/// varying smoothness, scenario B smooth squared-exponential GP dictionaries.
struct ScenarioSpec {
  enum class Kind { A, B };
  Kind scenario = Kind::A;
  Index p = 5;
  Index L = 2;
  Index K = 2;
  Index T = 100;
  double kappa = 10.0;       // GP kernel: c(x,x') = exp(-kappa (x-x')^2)
  double theta_a1 = 10.0;    // shrinkage shapes used for generating theta
  double theta_a2 = 10.0;
  double idio_shape = 1.0;   // Ga(shape, rate) on idiosyncratic precisions
  double idio_rate = 0.1;
  std::uint64_t seed = 1;

  static ScenarioSpec scenario_a();
  static ScenarioSpec scenario_b();
};

/// Generating draw behind a synthetic dataset, with its composed truth.
struct GroundTruth {
  ScenarioSpec spec;
  TimeGrid grid;
  Matrix theta;        // p x L
  Vector sigma0_diag;  // p
  Matrix xi;           // (L*K) x T, flattened column-major per step
  Matrix psi;          // K x T
  MeanCovPath gamma;
};

/// Bumps test function: sum of scaled (1+|x|)^-4 kernels at the standard
/// eleven locations; `shift` rotates the location vector so distinct
/// dictionary entries differ.
Vector bumps(const Vector& grid_points, int shift = 0);

/// One draw from GP(0, exp(-kappa d^2)) on the given points, with escalating
/// diagonal jitter (1e-10 up to 1e-6) before giving up.
Vector sample_gp(const Vector& grid_points, double kappa, RngStream& rng);

/// GP continuation: draw values at new points conditional on old values,
/// under the same kernel.
Vector sample_gp_conditional(const Vector& old_points, const Vector& old_values,
                             const Vector& new_points, double kappa, RngStream& rng);

std::pair<Dataset, GroundTruth> generate(const ScenarioSpec& spec, RngStream& rng);

/// Extends a generated set by extra_T steps on the same unit-spacing raw grid:
/// same theta and sigma0, bumps evaluated on the extended rescaled grid, GP
/// paths continued from their conditional laws. extra_T = 0 returns copies.
std::pair<Dataset, GroundTruth> continue_generate(const Dataset& prev_data,
                                                  const GroundTruth& prev,
                                                  Index extra_T, RngStream& rng);

}  // namespace ngpf
