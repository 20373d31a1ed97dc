#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace modalreg {

//! Closed interval [lo, hi].
struct Interval
{
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
  Interval expanded(double r) const { return { lo - r, hi + r }; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

//! A list of points in R^dim, stored row-major.
class PointSet
{
public:
  PointSet() = default;

  explicit PointSet(std::size_t dim)
    : dim_(dim)
  {
    if (dim == 0)
      throw InvalidArgument("PointSet: dimension must be >= 1");
  }

  PointSet(std::size_t dim, std::vector<double> coords)
    : PointSet(dim)
  {
    if (coords.size() % dim != 0)
      throw InvalidArgument("PointSet: coordinate count is not a multiple of the dimension");
    coords_ = std::move(coords);
  }

  //! Convenience for d = 1.
  static PointSet from_scalars(std::vector<double> xs) { return PointSet(1, std::move(xs)); }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const
  {
    return { coords_.data() + i * dim_, dim_ };
  }

  void push_back(std::span<const double> p)
  {
    if (p.size() != dim_)
      throw InvalidArgument("PointSet: point has wrong dimension");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

  const std::vector<double>& coords() const { return coords_; }

private:
  std::size_t dim_ = 1;
  std::vector<double> coords_;
};

inline std::string
format_point(std::span<const double> x)
{
  std::string s = "(";
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k)
      s += ", ";
    s += std::to_string(x[k]);
  }
  return s + ")";
}

inline bool
all_finite(std::span<const double> v)
{
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

//! n paired observations (x in R^d, y in R) with domain bounds.
class DataSet
{
public:
  //! Bounds default to the data range when omitted.
  DataSet(PointSet xs,
          std::vector<double> ys,
          std::vector<Interval> x_bounds = {},
          std::optional<Interval> y_bounds = std::nullopt)
    : xs_(std::move(xs))
    , ys_(std::move(ys))
  {
    if (ys_.empty())
      throw InvalidArgument("DataSet: at least one observation is required");
    if (xs_.size() != ys_.size())
      throw InvalidArgument("DataSet: xs and ys have different lengths");
    if (!all_finite(xs_.coords()) || !all_finite(ys_))
      throw InvalidArgument("DataSet: all values must be finite");

    const std::size_t d = xs_.dim();
    if (x_bounds.empty()) {
      x_bounds.resize(d);
      for (std::size_t k = 0; k < d; ++k) {
        x_bounds[k] = { xs_[0][k], xs_[0][k] };
        for (std::size_t i = 1; i < size(); ++i) {
          x_bounds[k].lo = std::min(x_bounds[k].lo, xs_[i][k]);
          x_bounds[k].hi = std::max(x_bounds[k].hi, xs_[i][k]);
        }
      }
    }
    if (x_bounds.size() != d)
      throw InvalidArgument("DataSet: x_bounds must have one interval per dimension");
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t k = 0; k < d; ++k)
        if (!x_bounds[k].contains(xs_[i][k]))
          throw InvalidArgument("DataSet: x_bounds do not contain observation " + std::to_string(i));
    x_bounds_ = std::move(x_bounds);

    if (!y_bounds) {
      auto [lo, hi] = std::minmax_element(ys_.begin(), ys_.end());
      y_bounds = Interval{ *lo, *hi };
    }
    for (std::size_t i = 0; i < size(); ++i)
      if (!y_bounds->contains(ys_[i]))
        throw InvalidArgument("DataSet: y_bounds do not contain observation " + std::to_string(i));
    y_bounds_ = *y_bounds;
  }

  //! d = 1 convenience.
  static DataSet from_pairs(std::vector<double> xs, std::vector<double> ys)
  {
    return DataSet(PointSet::from_scalars(std::move(xs)), std::move(ys));
  }

  std::size_t size() const { return ys_.size(); }
  std::size_t dim() const { return xs_.dim(); }

  std::span<const double> x(std::size_t i) const { return xs_[i]; }
  double y(std::size_t i) const { return ys_[i]; }

  const PointSet& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<Interval>& x_bounds() const { return x_bounds_; }
  const Interval& y_bounds() const { return y_bounds_; }

  //! Rows picked by index (with repetition allowed); bounds recomputed from
  //! the subset.
  DataSet subset(std::span<const std::size_t> rows) const
  {
    std::vector<double> coords;
    coords.reserve(rows.size() * dim());
    std::vector<double> ys;
    ys.reserve(rows.size());
    for (std::size_t r : rows) {
      auto xr = x(r);
      coords.insert(coords.end(), xr.begin(), xr.end());
      ys.push_back(ys_[r]);
    }
    return DataSet(PointSet(dim(), std::move(coords)), std::move(ys));
  }

private:
  PointSet xs_;
  std::vector<double> ys_;
  std::vector<Interval> x_bounds_;
  Interval y_bounds_;
};

} // namespace modalreg
