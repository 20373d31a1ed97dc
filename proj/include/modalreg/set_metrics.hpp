#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "error.hpp"

namespace modalreg {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

//! Sorted finite set of reals; values closer than 1e-12 are one point.
class FiniteSet1D
{
public:
  static constexpr double duplicate_tol = 1e-12;

  FiniteSet1D() = default;

  FiniteSet1D(std::vector<double> points)
    : points_(std::move(points))
  {
    for (double p : points_)
      if (!std::isfinite(p))
        throw InvalidArgument("FiniteSet1D: points must be finite");
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(),
                              points_.end(),
                              [](double a, double b) { return b - a <= duplicate_tol; }),
                  points_.end());
  }

  FiniteSet1D(std::initializer_list<double> points)
    : FiniteSet1D(std::vector<double>(points))
  {}

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::span<const double> points() const { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }

  //! d(v, A) = min |v - a|; +inf for the empty set.
  double distance(double v) const
  {
    if (points_.empty())
      return infinity;
    auto it = std::lower_bound(points_.begin(), points_.end(), v);
    double best = infinity;
    if (it != points_.end())
      best = *it - v;
    if (it != points_.begin())
      best = std::min(best, v - *std::prev(it));
    return best;
  }

private:
  std::vector<double> points_;
};

//! sup_{a in A} d(a, B)
inline double
directed_hausdorff(const FiniteSet1D& a, const FiniteSet1D& b)
{
  double worst = 0.0;
  for (double p : a.points())
    worst = std::max(worst, b.distance(p));
  return worst;
}

//! Haus(A, B) = inf{r : A in B + r, B in A + r}. Both empty gives 0, exactly
//! one empty gives +inf.
inline double
hausdorff(const FiniteSet1D& a, const FiniteSet1D& b)
{
  if (a.empty() && b.empty())
    return 0.0;
  if (a.empty() || b.empty())
    return infinity;
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

//! The dilation A + r as disjoint closed intervals, ascending.
inline std::vector<std::pair<double, double>>
dilate_intervals(const FiniteSet1D& a, double r)
{
  if (r < 0.0)
    throw InvalidArgument("dilation radius must be non-negative");
  std::vector<std::pair<double, double>> out;
  for (double p : a.points()) {
    if (!out.empty() && p - r <= out.back().second)
      out.back().second = p + r;
    else
      out.emplace_back(p - r, p + r);
  }
  return out;
}

//! Lebesgue measure of A + r with overlapping intervals merged.
inline double
dilate_length(const FiniteSet1D& a, double r)
{
  double total = 0.0;
  for (auto [lo, hi] : dilate_intervals(a, r))
    total += hi - lo;
  return total;
}

} // namespace modalreg
