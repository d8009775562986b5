#include "ngpf/rng.hpp"

#include <cmath>

namespace ngpf {

double RngStream::uniform() {
  // 53-bit mantissa shifted into (0,1); never returns an endpoint.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Vector RngStream::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0) || !(rate > 0))
    throw NumericalError("gamma draw requires positive shape and rate");
  if (shape < 1.0) {
    // Boost by one and downscale with a uniform power.
    const double g = gamma(shape + 1.0, 1.0);
    return g * std::pow(uniform(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::inv_gamma(double shape, double scale) {
  if (!(scale > 0))
    throw NumericalError("inv_gamma draw requires positive scale");
  return scale / gamma(shape, 1.0);
}

}  // namespace ngpf
