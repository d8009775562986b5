#pragma once

#include "ngpf/types.hpp"

#include <cstdint>
#include <random>

namespace ngpf {

/// Seeded random stream with self-contained normal/gamma samplers, so a
/// given seed reproduces the same draw sequence regardless of the standard
/// library's distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0,1).
  double uniform();

  /// Standard normal (Box-Muller, both variates used).
  double normal();

  Vector normal_vector(Index n);

  /// Gamma(shape, rate) via Marsaglia-Tsang squeeze; shape > 0, rate > 0.
  double gamma(double shape, double rate);

  /// InvGamma(shape, scale): density proportional to x^{-shape-1} e^{-scale/x}.
  double inv_gamma(double shape, double scale);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ngpf
