#pragma once

// Standard normal and chi-square functions, backed by Boost.Math.

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "rayreg/errors.hpp"

namespace rayreg::special {

inline double normal_cdf(double x) { return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2); }

inline double normal_sf(double x) { return 0.5 * boost::math::erfc(x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal_quantile: probability outside [0,1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double chi_square_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_square_cdf: dof must be positive");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

// Upper tail 1 - F(x), computed directly for accuracy at large x.
inline double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_square_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

inline double chi_square_quantile(double p, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_square_quantile: dof must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("chi_square_quantile: probability outside [0,1)");
  if (p == 0.0) return 0.0;
  return 2.0 * boost::math::gamma_p_inv(0.5 * dof, p);
}

}  // namespace rayreg::special
