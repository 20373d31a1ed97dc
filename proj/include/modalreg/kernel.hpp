#pragma once

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <string_view>

#include "error.hpp"

namespace modalreg {

//! Kernel identifier. Only the Gaussian kernel is implemented; the
//! derivative formulas throughout the library assume it.
enum class Kernel
{
  gaussian
};

inline Kernel
parse_kernel(std::string_view name)
{
  if (name == "gaussian")
    return Kernel::gaussian;
  throw InvalidArgument("unknown kernel '" + std::string(name) + "'");
}

inline constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;

//! K(u) = exp(-u^2/2) / sqrt(2 pi)
inline double
gauss_kernel(double u)
{
  return inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

inline double
normal_cdf(double z)
{
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

//! Upper-tail complement 1 - Phi(z), accurate for large z.
inline double
normal_sf(double z)
{
  return 0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0);
}

inline double
normal_pdf(double y, double mean, double sd)
{
  const double z = (y - mean) / sd;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z) / sd;
}

//! Standard normal quantile Phi^{-1}(p).
inline double
normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("normal_quantile: p must lie in (0, 1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

} // namespace modalreg
