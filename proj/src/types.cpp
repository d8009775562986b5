#include "ngpf/types.hpp"

#include <cmath>

namespace ngpf {

void Dataset::validate() const {
  const Index t = step_count();
  if (static_cast<Index>(times.size()) != t)
    throw DataError("Dataset: times length " + std::to_string(times.size()) +
                    " does not match value columns " + std::to_string(t));
  if (mask.rows() != values.rows() || mask.cols() != values.cols())
    throw DataError("Dataset: mask shape does not match values");
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i + 1] > times[i]))
      throw DataError("Dataset: times not strictly increasing at row " +
                      std::to_string(i + 2));
  }
  for (Index j = 0; j < values.rows(); ++j)
    for (Index i = 0; i < t; ++i)
      if (mask(j, i) && !std::isfinite(values(j, i)))
        throw DataError("Dataset: non-finite observed value at series " +
                        std::to_string(j + 1) + ", step " + std::to_string(i + 1));
}

Dataset Dataset::fully_observed(std::vector<double> times, Matrix values) {
  Dataset d;
  d.mask = BoolArray::Constant(values.rows(), values.cols(), true);
  d.values = std::move(values);
  d.times = std::move(times);
  d.validate();
  return d;
}

Dataset Dataset::slice_steps(Index first, Index count) const {
  Dataset out;
  out.times.assign(times.begin() + first, times.begin() + first + count);
  out.values = values.middleCols(first, count);
  out.mask = mask.middleCols(first, count);
  return out;
}

Dataset Dataset::concat(const Dataset& tail) const {
  Dataset out;
  out.times = times;
  out.times.insert(out.times.end(), tail.times.begin(), tail.times.end());
  out.values.resize(values.rows(), values.cols() + tail.values.cols());
  out.values << values, tail.values;
  out.mask.resize(mask.rows(), mask.cols() + tail.mask.cols());
  out.mask << mask, tail.mask;
  out.validate();
  return out;
}

TimeGrid TimeGrid::from_times(const std::vector<double>& times) {
  const Index t = static_cast<Index>(times.size());
  if (t < 1) throw DataError("TimeGrid: empty time vector");
  Affine map;
  if (t == 1) {
    map.offset = times[0] - 1.0;
    map.scale = 1.0;
  } else {
    const double span = times[t - 1] - times[0];
    if (!(span > 0)) throw DataError("TimeGrid: times not strictly increasing");
    const double mean_spacing = span / static_cast<double>(t - 1);
    map.offset = times[0] - mean_spacing;
    map.scale = span + mean_spacing;
  }
  return with_affine(times, map);
}

TimeGrid TimeGrid::with_affine(const std::vector<double>& times, Affine affine) {
  TimeGrid g;
  g.raw = times;
  g.affine = affine;
  const Index t = static_cast<Index>(times.size());
  g.rescaled.resize(t);
  for (Index i = 0; i < t; ++i) g.rescaled[i] = affine.apply(times[i]);
  g.deltas.resize(t > 0 ? t - 1 : 0);
  for (Index i = 0; i + 1 < t; ++i) {
    g.deltas[i] = g.rescaled[i + 1] - g.rescaled[i];
    if (!(g.deltas[i] > 0))
      throw DataError("TimeGrid: non-positive spacing at step " + std::to_string(i + 1));
  }
  return g;
}

}  // namespace ngpf
