#pragma once

// Rayleigh distribution parameterized by its mean mu:
//
//   f(y; mu) = pi*y / (2 mu^2) * exp(-pi y^2 / (4 mu^2)),   y >= 0
//
// so that E[Y] = mu and Var[Y] = mu^2 (4/pi - 1).

#include <cmath>
#include <numbers>

#include "rayreg/errors.hpp"
#include "rayreg/random.hpp"

namespace rayreg {

class RayleighMean {
 public:
  explicit RayleighMean(double mu) : mu_(mu) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("RayleighMean: mean must be positive and finite");
  }

  double mu() const noexcept { return mu_; }
  double mean() const noexcept { return mu_; }
  double variance() const noexcept { return mu_ * mu_ * (4.0 / std::numbers::pi - 1.0); }

 private:
  double mu_;
};

namespace detail {
// pi y^2 / (4 mu^2), the exponent shared by pdf, cdf and log-likelihood.
inline double rayleigh_exponent(double mu, double y) noexcept {
  const double ratio = y / mu;
  return 0.25 * std::numbers::pi * ratio * ratio;
}
}  // namespace detail

inline double pdf(const RayleighMean& d, double y) {
  if (y < 0.0) throw DomainError("pdf: y must be non-negative");
  const double mu = d.mu();
  return std::numbers::pi * y / (2.0 * mu * mu) * std::exp(-detail::rayleigh_exponent(mu, y));
}

inline double log_pdf(const RayleighMean& d, double y) {
  if (!(y > 0.0)) throw DomainError("log_pdf: y must be positive");
  const double mu = d.mu();
  return std::log(std::numbers::pi / 2.0) + std::log(y) - 2.0 * std::log(mu) - detail::rayleigh_exponent(mu, y);
}

inline double cdf(const RayleighMean& d, double y) {
  if (y <= 0.0) return 0.0;
  return -std::expm1(-detail::rayleigh_exponent(d.mu(), y));
}

// 1 - F(y), without cancellation in the upper tail.
inline double survival(const RayleighMean& d, double y) {
  if (y <= 0.0) return 1.0;
  return std::exp(-detail::rayleigh_exponent(d.mu(), y));
}

inline double quantile(const RayleighMean& d, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("quantile: probability must lie in [0,1)");
  return 2.0 * d.mu() * std::sqrt(-std::log1p(-u) / std::numbers::pi);
}

// Inversion sampling: Q(U) with U uniform on (0,1), so the draw is strictly positive.
inline double sample(const RayleighMean& d, Rng& rng) { return quantile(d, uniform_open01(rng)); }

}  // namespace rayreg
