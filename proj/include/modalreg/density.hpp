#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "kernel.hpp"

namespace modalreg {

//! Curvature floor on |p_yy| below which a modal function has no
//! well-defined slope.
inline constexpr double curvature_floor = 1e-8;

//! Fraction of a single observation's peak marginal contribution
//! K(0) / (n h^d) below which a query x is treated as outside the support.
inline constexpr double marginal_floor_fraction = 1e-6;

//! Joint KDE p(x, y) = 1/(n h^{d+1}) sum K(|x - X_i| / h) K((y - Y_i) / h).
//! Immutable; copies share the underlying data.
class KdeModel
{
public:
  KdeModel(DataSet data, double h, Kernel kernel = Kernel::gaussian)
    : data_(std::make_shared<const DataSet>(std::move(data)))
    , h_(h)
    , kernel_(kernel)
  {
    if (!(h > 0.0) || !std::isfinite(h))
      throw InvalidArgument("KdeModel: bandwidth must be positive and finite");
  }

  KdeModel(std::shared_ptr<const DataSet> data, double h, Kernel kernel = Kernel::gaussian)
    : data_(std::move(data))
    , h_(h)
    , kernel_(kernel)
  {
    if (!data_)
      throw InvalidArgument("KdeModel: null data");
    if (!(h > 0.0) || !std::isfinite(h))
      throw InvalidArgument("KdeModel: bandwidth must be positive and finite");
  }

  const DataSet& data() const { return *data_; }
  const std::shared_ptr<const DataSet>& shared_data() const { return data_; }
  double h() const { return h_; }
  Kernel kernel() const { return kernel_; }
  std::size_t n() const { return data_->size(); }
  std::size_t dim() const { return data_->dim(); }

  //! Same data, different bandwidth.
  KdeModel with_bandwidth(double h) const { return KdeModel(data_, h, kernel_); }

  //! 1 / (n h^{d+1}) times K(0)^2: the joint normalisation constant.
  double joint_norm() const
  {
    return inv_sqrt_2pi * inv_sqrt_2pi /
           (static_cast<double>(n()) * std::pow(h_, static_cast<double>(dim() + 1)));
  }

  //! Marginal support floor for p(x).
  double marginal_floor() const
  {
    return marginal_floor_fraction * inv_sqrt_2pi /
           (static_cast<double>(n()) * std::pow(h_, static_cast<double>(dim())));
  }

private:
  std::shared_ptr<const DataSet> data_;
  double h_;
  Kernel kernel_;
};

//! Joint density and the partials needed by the mode machinery.
struct DensityEval
{
  double p = 0.0;
  double p_y = 0.0;
  double p_yy = 0.0;
  std::vector<double> p_x;  // gradient in x
  std::vector<double> p_yx; // gradient in x of p_y
};

namespace detail {

inline void
check_query(const KdeModel& model, std::span<const double> x, double y)
{
  if (x.size() != model.dim())
    throw InvalidArgument("query point has dimension " + std::to_string(x.size()) +
                          ", model has " + std::to_string(model.dim()));
  if (!all_finite(x) || !std::isfinite(y))
    throw InvalidArgument("query point must be finite");
}

inline double
squared_distance(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

} // namespace detail

inline DensityEval
eval_joint(const KdeModel& model, std::span<const double> x, double y)
{
  detail::check_query(model, x, y);
  const DataSet& data = model.data();
  const std::size_t d = model.dim();
  const double h = model.h();
  const double h2 = h * h;

  DensityEval out;
  out.p_x.assign(d, 0.0);
  out.p_yx.assign(d, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto xi = data.x(i);
    const double u = (y - data.y(i)) / h;
    const double w = std::exp(-0.5 * (detail::squared_distance(x, xi) / h2 + u * u));
    out.p += w;
    out.p_y += -w * u / h;
    out.p_yy += w * (u * u - 1.0) / h2;
    for (std::size_t k = 0; k < d; ++k) {
      const double dk = -(x[k] - xi[k]) / h2;
      out.p_x[k] += w * dk;
      out.p_yx[k] += w * dk * (-u / h);
    }
  }
  const double c = model.joint_norm();
  out.p *= c;
  out.p_y *= c;
  out.p_yy *= c;
  for (std::size_t k = 0; k < d; ++k) {
    out.p_x[k] *= c;
    out.p_yx[k] *= c;
  }
  return out;
}

//! Marginal KDE of X using the same x-kernel and bandwidth:
//! p(x) = 1/(n h^d) sum K(|x - X_i| / h).
inline double
eval_marginal(const KdeModel& model, std::span<const double> x)
{
  detail::check_query(model, x, 0.0);
  const DataSet& data = model.data();
  const double h2 = model.h() * model.h();
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    s += std::exp(-0.5 * detail::squared_distance(x, data.x(i)) / h2);
  return s * inv_sqrt_2pi /
         (static_cast<double>(model.n()) * std::pow(model.h(), static_cast<double>(model.dim())));
}

//! Full value, gradient and Hessian of the joint density for d = 1,
//! ordered (x, y).
struct JointHessian
{
  double p = 0.0;
  double grad[2] = { 0.0, 0.0 };
  double H[2][2] = { { 0.0, 0.0 }, { 0.0, 0.0 } };
};

inline JointHessian
eval_hessian(const KdeModel& model, double x, double y)
{
  if (model.dim() != 1)
    throw InvalidArgument("eval_hessian requires d = 1");
  const double xq[1] = { x };
  detail::check_query(model, xq, y);
  const DataSet& data = model.data();
  const double h = model.h();
  const double h2 = h * h;

  JointHessian out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = (x - data.x(i)[0]) / h;
    const double u = (y - data.y(i)) / h;
    const double w = std::exp(-0.5 * (v * v + u * u));
    out.p += w;
    out.grad[0] += -w * v / h;
    out.grad[1] += -w * u / h;
    out.H[0][0] += w * (v * v - 1.0) / h2;
    out.H[0][1] += w * u * v / h2;
    out.H[1][1] += w * (u * u - 1.0) / h2;
  }
  const double c = model.joint_norm();
  out.p *= c;
  out.grad[0] *= c;
  out.grad[1] *= c;
  out.H[0][0] *= c;
  out.H[0][1] *= c;
  out.H[1][1] *= c;
  out.H[1][0] = out.H[0][1];
  return out;
}

//! The joint density restricted to a fixed x: a weighted 1-d Gaussian KDE in
//! y. x-kernel weights are computed once, which is what makes repeated
//! mean-shift iterations at the same x cheap.
class ConditionalSlice
{
public:
  struct Value
  {
    double p = 0.0;
    double p_y = 0.0;
    double p_yy = 0.0;
  };

  struct Step
  {
    double next_y = 0.0;
    double p = 0.0;    // joint density at the current y
    double p_y = 0.0;  // its y-derivatives
    double p_yy = 0.0;
  };

  ConditionalSlice(const KdeModel& model, std::span<const double> x)
    : x_(x.begin(), x.end())
    , h_(model.h())
    , norm_(model.joint_norm())
  {
    detail::check_query(model, x, 0.0);
    const DataSet& data = model.data();
    const double h2 = h_ * h_;
    std::vector<double> logw(data.size());
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
      logw[i] = -0.5 * detail::squared_distance(x, data.x(i)) / h2;
      max_logw = std::max(max_logw, logw[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      // Terms more than ~e^-745 below the largest one vanish in double anyway.
      if (logw[i] < max_logw - 745.0)
        continue;
      ys_.push_back(data.y(i));
      logw_.push_back(logw[i]);
      sum += std::exp(logw[i]);
    }
    marginal_ = sum * inv_sqrt_2pi /
                (static_cast<double>(model.n()) * std::pow(h_, static_cast<double>(model.dim())));
    floor_ = model.marginal_floor();
    y_bounds_ = data.y_bounds();
  }

  std::span<const double> x() const { return x_; }
  double h() const { return h_; }
  double marginal() const { return marginal_; }
  bool in_support() const { return marginal_ >= floor_; }
  const Interval& y_bounds() const { return y_bounds_; }

  void require_support() const
  {
    if (!in_support())
      throw LowDensityError("marginal density at x = " + format_point(x_) +
                              " is below the support floor",
                            format_point(x_));
  }

  Value eval(double y) const
  {
    Value v;
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      const double u = (y - ys_[i]) / h_;
      const double w = std::exp(logw_[i] - 0.5 * u * u);
      v.p += w;
      v.p_y += -w * u;
      v.p_yy += w * (u * u - 1.0);
    }
    v.p *= norm_;
    v.p_y *= norm_ / h_;
    v.p_yy *= norm_ / (h_ * h_);
    return v;
  }

  //! One partial mean-shift update y <- sum Y_i w_i / sum w_i, computed with
  //! a log-sum-exp shift so far-tail starts do not underflow.
  Step mean_shift(double y) const
  {
    double max_e = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      const double u = (y - ys_[i]) / h_;
      max_e = std::max(max_e, logw_[i] - 0.5 * u * u);
    }
    double den = 0.0;
    double num = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      const double u = (y - ys_[i]) / h_;
      const double w = std::exp(logw_[i] - 0.5 * u * u - max_e);
      den += w;
      num += w * ys_[i];
      sq += w * u * u;
    }
    Step s;
    s.next_y = num / den;
    const double scale = std::exp(max_e) * norm_;
    const double h2 = h_ * h_;
    s.p = den * scale;
    // p_y = sum w (Y_i - y) / h^2, which is (num - y den) / h^2.
    s.p_y = (num - y * den) * scale / h2;
    s.p_yy = (sq - den) * scale / h2;
    return s;
  }

  //! Conditional probability p(Y in [a, b] | x), exact for the Gaussian kernel.
  double conditional_mass(double a, double b) const
  {
    if (!(b > a))
      return 0.0;
    double max_logw = -std::numeric_limits<double>::infinity();
    for (double lw : logw_)
      max_logw = std::max(max_logw, lw);
    double den = 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      const double w = std::exp(logw_[i] - max_logw);
      den += w;
      const double za = (a - ys_[i]) / h_;
      const double zb = (b - ys_[i]) / h_;
      // Difference of tails on the side where it is accurate.
      const double m = za > 0.0 ? normal_sf(za) - normal_sf(zb) : normal_cdf(zb) - normal_cdf(za);
      num += w * m;
    }
    return num / den;
  }

  //! Conditional density p(y | x) = p(x, y) / p(x).
  double conditional_density(double y) const { return eval(y).p / marginal_; }

private:
  std::vector<double> x_;
  double h_;
  double norm_;
  double marginal_ = 0.0;
  double floor_ = 0.0;
  Interval y_bounds_;
  std::vector<double> ys_;
  std::vector<double> logw_;
};

//! Conditional KDE p(y | x) = p(x, y) / p(x).
inline double
eval_conditional(const KdeModel& model, std::span<const double> x, double y)
{
  detail::check_query(model, x, y);
  ConditionalSlice slice(model, x);
  slice.require_support();
  return slice.conditional_density(y);
}

//! Slope of the modal function through (x, y): -p_yx / p_yy.
inline std::vector<double>
modal_gradient(const KdeModel& model, std::span<const double> x, double y)
{
  DensityEval e = eval_joint(model, x, y);
  if (std::abs(e.p_yy) <= curvature_floor)
    throw DegenerateCurvatureError("|p_yy| = " + std::to_string(std::abs(e.p_yy)) +
                                   " is below the curvature floor at x = " + format_point(x));
  std::vector<double> g(model.dim());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = -e.p_yx[k] / e.p_yy;
  return g;
}

} // namespace modalreg
