#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ngpf {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Malformed or inconsistent input data (files, datasets, dimensions).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown (singular innovation covariance, failed factorization).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Multivariate time series: p series observed at strictly increasing times,
/// with a per-cell observation mask (false = missing).
struct Dataset {
  std::vector<double> times;  // length T, strictly increasing
  Matrix values;              // p x T; content at masked cells is ignored
  BoolArray mask;             // p x T, true = observed

  Index series_count() const { return values.rows(); }
  Index step_count() const { return values.cols(); }

  /// Dimension and monotonicity checks; throws DataError.
  void validate() const;

  static Dataset fully_observed(std::vector<double> times, Matrix values);

  /// Columns [first, first+count) as a new Dataset.
  Dataset slice_steps(Index first, Index count) const;

  /// Appends the steps of `tail` (times must continue increasing).
  Dataset concat(const Dataset& tail) const;
};

/// Observation grid plus the affine map onto the unit interval used for all
/// state-equation spacings. A grid built with `from_times` lands in (0,1];
/// grids extended past the fitted range may exceed 1.
struct TimeGrid {
  struct Affine {
    double offset = 0.0;
    double scale = 1.0;
    double apply(double t) const { return (t - offset) / scale; }
  };

  std::vector<double> raw;  // original timestamps, kept for reporting
  Vector rescaled;          // affine image of raw
  Vector deltas;            // rescaled[i+1] - rescaled[i], size T-1
  Affine affine;

  Index size() const { return rescaled.size(); }

  /// Rescales so the last point maps to 1 and the first to one mean spacing
  /// above 0 (an equally spaced grid 1..T maps to {1/T, ..., 1}).
  static TimeGrid from_times(const std::vector<double>& times);

  /// Grid over `times` under a fixed, previously chosen affine map.
  static TimeGrid with_affine(const std::vector<double>& times, Affine affine);
};

}  // namespace ngpf
