#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "random.hpp"
#include "set_metrics.hpp"

namespace modalreg {

//! Distribution of one covariate: uniform on [a, b] or normal(a, b).
struct XDistribution
{
  enum class Kind
  {
    uniform,
    normal
  };
  Kind kind = Kind::uniform;
  double a = 0.0;
  double b = 1.0;

  void validate() const
  {
    if (!std::isfinite(a) || !std::isfinite(b))
      throw InvalidArgument("x distribution: parameters must be finite");
    if (kind == Kind::uniform && !(b > a))
      throw InvalidArgument("x distribution: uniform needs lo < hi");
    if (kind == Kind::normal && !(b > 0.0))
      throw InvalidArgument("x distribution: normal needs sd > 0");
  }

  double draw(Rng& rng) const
  {
    if (kind == Kind::uniform)
      return std::uniform_real_distribution<double>(a, b)(rng);
    return std::normal_distribution<double>(a, b)(rng);
  }

  std::optional<Interval> bounds() const
  {
    if (kind == Kind::uniform)
      return Interval{ a, b };
    return std::nullopt;
  }
};

//! offset + sum_k linear[k] x_k + sum_k quadratic[k] x_k^2
//!        + sin_amplitude * sin(sin_frequency * x_1)
struct MeanFunction
{
  double offset = 0.0;
  std::vector<double> linear;
  std::vector<double> quadratic;
  double sin_amplitude = 0.0;
  double sin_frequency = 0.0;

  double operator()(std::span<const double> x) const
  {
    double v = offset;
    for (std::size_t k = 0; k < linear.size() && k < x.size(); ++k)
      v += linear[k] * x[k];
    for (std::size_t k = 0; k < quadratic.size() && k < x.size(); ++k)
      v += quadratic[k] * x[k] * x[k];
    if (sin_amplitude != 0.0)
      v += sin_amplitude * std::sin(sin_frequency * x[0]);
    return v;
  }
};

//! One mixture component. With `support` set, the component exists only
//! where x_1 lies in it, which makes K(x) piecewise constant.
struct Component
{
  double weight = 1.0;
  MeanFunction mean;
  double sd = 1.0;
  std::optional<Interval> support;
};

//! A one-dimensional Gaussian mixture, components sorted by mean.
struct Mixture1D
{
  std::vector<double> weight, mean, sd;
  std::vector<std::size_t> component; // index into the owning spec

  std::size_t size() const { return weight.size(); }

  double pdf(double y) const
  {
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j)
      s += weight[j] * normal_pdf(y, mean[j], sd[j]);
    return s;
  }

  double dpdf(double y) const
  {
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j)
      s -= weight[j] * normal_pdf(y, mean[j], sd[j]) * (y - mean[j]) / (sd[j] * sd[j]);
    return s;
  }

  //! P(a <= Y <= b).
  double mass(double a, double b) const
  {
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j)
      s += weight[j] * (normal_cdf((b - mean[j]) / sd[j]) - normal_cdf((a - mean[j]) / sd[j]));
    return s;
  }

  double regression_mean() const
  {
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j)
      s += weight[j] * mean[j];
    return s;
  }

  double sd_min() const { return *std::min_element(sd.begin(), sd.end()); }
  double sd_max() const { return *std::max_element(sd.begin(), sd.end()); }
  double weight_min() const { return *std::min_element(weight.begin(), weight.end()); }
  double weight_max() const { return *std::max_element(weight.begin(), weight.end()); }

  //! Smallest gap between consecutive means; +inf for one component.
  double separation() const
  {
    double d = infinity;
    for (std::size_t j = 1; j < size(); ++j)
      d = std::min(d, mean[j] - mean[j - 1]);
    return d;
  }
};

//! Conditional Gaussian-mixture design:
//! Y | X=x ~ sum_j pi_j(x) N(mu_j(x), sigma_j^2).
struct GmSpec
{
  std::vector<XDistribution> x;
  std::vector<Component> components;

  std::size_t dim() const { return x.size(); }

  void validate() const
  {
    if (x.empty())
      throw InvalidArgument("mixture spec: at least one covariate is required");
    if (components.empty())
      throw InvalidArgument("mixture spec: at least one component is required");
    for (const auto& xd : x)
      xd.validate();
    for (const auto& c : components) {
      if (!(c.weight > 0.0) || !std::isfinite(c.weight))
        throw InvalidArgument("mixture spec: component weights must be positive");
      if (!(c.sd > 0.0) || !std::isfinite(c.sd))
        throw InvalidArgument("mixture spec: component sd must be positive");
      if (c.mean.linear.size() > dim() || c.mean.quadratic.size() > dim())
        throw InvalidArgument("mixture spec: mean coefficients exceed the covariate dimension");
      if (c.support && !(c.support->hi > c.support->lo))
        throw InvalidArgument("mixture spec: component support must have lo < hi");
    }
  }

  //! The conditional law at x with weights renormalised over the active
  //! components.
  Mixture1D mixture_at(std::span<const double> xq) const
  {
    if (xq.size() != dim())
      throw InvalidArgument("mixture spec: query has wrong dimension");
    std::vector<std::size_t> active;
    double total = 0.0;
    for (std::size_t j = 0; j < components.size(); ++j)
      if (!components[j].support || components[j].support->contains(xq[0])) {
        active.push_back(j);
        total += components[j].weight;
      }
    if (active.empty())
      throw InvalidArgument("mixture spec: no component is active at " + format_point(xq));
    std::vector<double> mu(active.size());
    for (std::size_t a = 0; a < active.size(); ++a)
      mu[a] = components[active[a]].mean(xq);
    std::vector<std::size_t> order(active.size());
    for (std::size_t a = 0; a < order.size(); ++a)
      order[a] = a;
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return mu[i] < mu[j]; });

    Mixture1D m;
    for (std::size_t a : order) {
      const Component& c = components[active[a]];
      m.weight.push_back(c.weight / total);
      m.mean.push_back(mu[a]);
      m.sd.push_back(c.sd);
      m.component.push_back(active[a]);
    }
    return m;
  }
};

//! Jointly Gaussian (X, Y): mean has d+1 entries, Y last; cov is row-major
//! (d+1) x (d+1).
struct GaussianJointSpec
{
  std::vector<double> mean;
  std::vector<double> cov;

  std::size_t dim() const { return mean.size() - 1; }

  //! Lower Cholesky factor; throws unless cov is symmetric positive definite.
  std::vector<double> cholesky() const
  {
    const std::size_t m = mean.size();
    std::vector<double> l(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = cov[i * m + j];
        for (std::size_t k = 0; k < j; ++k)
          s -= l[i * m + k] * l[j * m + k];
        if (i == j) {
          if (!(s > 0.0))
            throw InvalidArgument("gaussian spec: covariance is not positive definite");
          l[i * m + i] = std::sqrt(s);
        } else {
          l[i * m + j] = s / l[j * m + j];
        }
      }
    return l;
  }

  void validate() const
  {
    const std::size_t m = mean.size();
    if (m < 2)
      throw InvalidArgument("gaussian spec: mean needs at least two entries");
    if (cov.size() != m * m)
      throw InvalidArgument("gaussian spec: covariance must be (d+1) x (d+1)");
    if (!all_finite(mean) || !all_finite(cov))
      throw InvalidArgument("gaussian spec: entries must be finite");
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs(cov[i * m + j] - cov[j * m + i]) > 1e-12 * (std::abs(cov[i * m + j]) + 1.0))
          throw InvalidArgument("gaussian spec: covariance must be symmetric");
    cholesky();
  }
};

using Design = std::variant<GmSpec, GaussianJointSpec>;

inline std::size_t
design_dim(const Design& design)
{
  return std::visit([](const auto& s) { return s.dim(); }, design);
}

inline void
validate(const Design& design)
{
  std::visit([](const auto& s) { s.validate(); }, design);
}

//! Generated sample plus the mixture component of each draw (0 for the
//! Gaussian design).
struct Generated
{
  DataSet data;
  std::vector<std::size_t> labels;
};

inline Generated
generate(const GmSpec& spec, std::size_t n, std::uint64_t seed)
{
  spec.validate();
  if (n == 0)
    throw InvalidArgument("generate: n must be >= 1");
  Rng rng = make_stream(seed, { 0x67656e });
  const std::size_t d = spec.dim();
  std::vector<double> coords(n * d), ys(n);
  std::vector<std::size_t> labels(n);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k)
      coords[i * d + k] = spec.x[k].draw(rng);
    const Mixture1D mix = spec.mixture_at(std::span<const double>(coords.data() + i * d, d));
    double r = u(rng), acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < mix.size(); ++j) {
      acc += mix.weight[j];
      if (r < acc)
        break;
    }
    ys[i] = mix.mean[j] + mix.sd[j] * z(rng);
    labels[i] = mix.component[j];
  }
  std::vector<Interval> xb;
  for (std::size_t k = 0; k < d; ++k) {
    auto b = spec.x[k].bounds();
    if (!b) {
      xb.clear();
      break;
    }
    xb.push_back(*b);
  }
  return { DataSet(PointSet(d, std::move(coords)), std::move(ys), std::move(xb)), std::move(labels) };
}

inline Generated
generate(const GaussianJointSpec& spec, std::size_t n, std::uint64_t seed)
{
  spec.validate();
  if (n == 0)
    throw InvalidArgument("generate: n must be >= 1");
  Rng rng = make_stream(seed, { 0x67656e });
  const std::size_t m = spec.mean.size(), d = m - 1;
  const std::vector<double> l = spec.cholesky();
  std::normal_distribution<double> z;
  std::vector<double> coords(n * d), ys(n), e(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : e)
      v = z(rng);
    for (std::size_t r = 0; r < m; ++r) {
      double v = spec.mean[r];
      for (std::size_t c = 0; c <= r; ++c)
        v += l[r * m + c] * e[c];
      if (r < d)
        coords[i * d + r] = v;
      else
        ys[i] = v;
    }
  }
  return { DataSet(PointSet(d, std::move(coords)), std::move(ys)), std::vector<std::size_t>(n, 0) };
}

inline Generated
generate(const Design& design, std::size_t n, std::uint64_t seed)
{
  return std::visit([&](const auto& s) { return generate(s, n, seed); }, design);
}

//! Local maxima of a mixture density: sign changes of the derivative on a
//! grid of step sigma_min/100, refined by bisection to 1e-8. A degenerate
//! flat maximum (zero second derivative) counts once.
inline FiniteSet1D
mixture_modes(const Mixture1D& mix)
{
  const double step = mix.sd_min() / 100.0;
  const double lo = mix.mean.front() - 6.0 * mix.sd_max();
  const double hi = mix.mean.back() + 6.0 * mix.sd_max();
  const std::size_t steps = static_cast<std::size_t>(std::ceil((hi - lo) / step));

  std::vector<double> modes;
  double last_pos = lo; // last grid point with positive derivative
  bool rising = mix.dpdf(lo) > 0.0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const double y = lo + static_cast<double>(s) * step;
    const double g = mix.dpdf(y);
    if (g > 0.0) {
      rising = true;
      last_pos = y;
    } else if (g < 0.0 && rising) {
      double a = last_pos, b = y;
      // To full precision: displacements far out in the tails are tiny.
      for (int it = 0; it < 200; ++it) {
        const double c = 0.5 * (a + b);
        if (c <= a || c >= b)
          break;
        (mix.dpdf(c) > 0.0 ? a : b) = c;
      }
      modes.push_back(0.5 * (a + b));
      rising = false;
    }
  }
  return FiniteSet1D(std::move(modes));
}

//! The population conditional mode set M(x).
inline FiniteSet1D
population_modes(const GmSpec& spec, std::span<const double> x)
{
  return mixture_modes(spec.mixture_at(x));
}

//! y = intercept + slope . x, the mode of a Gaussian conditional.
struct LinearModeFunction
{
  double intercept = 0.0;
  std::vector<double> slope;

  double operator()(std::span<const double> x) const
  {
    double v = intercept;
    for (std::size_t k = 0; k < slope.size(); ++k)
      v += slope[k] * x[k];
    return v;
  }
};

//! Mode of Y | X=x for the Gaussian (X, Y) convolved with an isotropic
//! Gaussian kernel of bandwidth h: covariance Sigma + h^2 I, so the mode is
//! the conditional mean mu_y + S_yx (S_xx + h^2 I)^{-1} (x - mu_x). h = 0
//! gives the population mode.
inline LinearModeFunction
smoothed_mode_oracle(const GaussianJointSpec& spec, double h)
{
  spec.validate();
  if (!(h >= 0.0))
    throw InvalidArgument("smoothed_mode_oracle: h must be >= 0");
  const std::size_t m = spec.mean.size(), d = m - 1;
  // Solve (S_xx + h^2 I) b = S_xy by Gaussian elimination with pivoting.
  std::vector<double> a(d * (d + 1));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c)
      a[r * (d + 1) + c] = spec.cov[r * m + c] + (r == c ? h * h : 0.0);
    a[r * (d + 1) + d] = spec.cov[r * m + d];
  }
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < d; ++r)
      if (std::abs(a[r * (d + 1) + c]) > std::abs(a[p * (d + 1) + c]))
        p = r;
    for (std::size_t k = 0; k <= d; ++k)
      std::swap(a[c * (d + 1) + k], a[p * (d + 1) + k]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c)
        continue;
      const double f = a[r * (d + 1) + c] / a[c * (d + 1) + c];
      for (std::size_t k = c; k <= d; ++k)
        a[r * (d + 1) + k] -= f * a[c * (d + 1) + k];
    }
  }
  LinearModeFunction out;
  out.slope.resize(d);
  out.intercept = spec.mean[d];
  for (std::size_t k = 0; k < d; ++k) {
    out.slope[k] = a[k * (d + 1) + d] / a[k * (d + 1) + k];
    out.intercept -= out.slope[k] * spec.mean[k];
  }
  return out;
}

inline LinearModeFunction
smoothed_mode_oracle(const Design& design, double h)
{
  if (const auto* g = std::get_if<GaussianJointSpec>(&design))
    return smoothed_mode_oracle(*g, h);
  throw Unsupported("smoothed_mode_oracle: needs a jointly Gaussian design");
}

inline FiniteSet1D
population_modes(const GaussianJointSpec& spec, std::span<const double> x)
{
  return FiniteSet1D({ smoothed_mode_oracle(spec, 0.0)(x) });
}

inline FiniteSet1D
population_modes(const Design& design, std::span<const double> x)
{
  return std::visit([&](const auto& s) { return population_modes(s, x); }, design);
}

//! Displacement bound between mixture means and their modes:
//! sigma_max * 4 (pi_max/pi_min) e^{-W^2/2} / W, valid once
//! W >= sqrt(2 log(4 (max(K,3) - 1) pi_max/pi_min)), W = separation/sigma_max.
struct DisplacementBound
{
  double w = 0.0;
  double threshold = 0.0;
  bool applies = false;
  double bound = 0.0;
  double observed = infinity; // max |mu_j - m_j|, +inf if mode count != K
};

inline DisplacementBound
mode_displacement_bound(const Mixture1D& mix)
{
  DisplacementBound r;
  const double k = static_cast<double>(mix.size());
  const double ratio = mix.weight_max() / mix.weight_min();
  r.w = mix.separation() / mix.sd_max();
  r.threshold = std::sqrt(2.0 * std::log(4.0 * (std::max(k, 3.0) - 1.0) * ratio));
  r.applies = r.w >= r.threshold;
  r.bound = mix.sd_max() * 4.0 * ratio * std::exp(-0.5 * r.w * r.w) / r.w;
  const FiniteSet1D modes = mixture_modes(mix);
  if (modes.size() == mix.size()) {
    r.observed = 0.0;
    for (std::size_t j = 0; j < mix.size(); ++j)
      r.observed = std::max(r.observed, std::abs(modes[j] - mix.mean[j]));
  }
  return r;
}

//! Population prediction-set comparison at one x: the modal band M(x) + eps
//! against the mean band mu(x) + eta, both at coverage 1 - alpha.
struct SizeComparison
{
  bool preconditions_met = false; // alpha < 0.1, outer weights > alpha, K >= 2
  bool premise_holds = false;
  double w = 0.0;
  double premise_bound = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  double modal_length = 0.0;
  double mean_length = 0.0;
  //! False only for a counterexample: premise holds, modal band not shorter.
  bool implication_holds = true;
};

namespace detail {
//! Smallest r >= 0 with mass(r) >= target, for nondecreasing mass.
template<class Mass>
double
smallest_radius(Mass&& mass, double target, double scale)
{
  double lo = 0.0, hi = scale;
  while (mass(hi) < target)
    hi *= 2.0;
  if (mass(lo) >= target)
    return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) >= target ? hi : lo) = mid;
  }
  return hi;
}
} // namespace detail

inline SizeComparison
compare_prediction_sizes(const Mixture1D& mix, double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidArgument("alpha must lie in (0, 1)");
  SizeComparison r;
  const double k = static_cast<double>(mix.size());
  r.preconditions_met = alpha < 0.1 && mix.size() >= 2 && mix.weight.front() > alpha &&
                        mix.weight.back() > alpha;
  r.w = mix.separation() / mix.sd_max();
  if (mix.size() >= 2) {
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double a = 1.1 * k / (k - 1.0) * z;
    const double b = std::sqrt(std::max(6.4, 2.0 * std::log(4.0 * (std::max(k, 3.0) - 1.0))) +
                               2.0 * std::log(mix.weight_max() / mix.weight_min()));
    r.premise_bound = std::max(a, b);
    r.premise_holds = r.preconditions_met && r.w > r.premise_bound;
  }

  const FiniteSet1D modes = mixture_modes(mix);
  auto band_mass = [&](double eps) {
    double s = 0.0;
    for (auto [lo, hi] : dilate_intervals(modes, eps))
      s += mix.mass(lo, hi);
    return s;
  };
  const double mu = mix.regression_mean();
  auto mean_mass = [&](double eta) { return mix.mass(mu - eta, mu + eta); };
  const double target = 1.0 - alpha;
  r.epsilon = detail::smallest_radius(band_mass, target, mix.sd_max());
  r.eta = detail::smallest_radius(mean_mass, target, mix.sd_max());
  r.modal_length = dilate_length(modes, r.epsilon);
  r.mean_length = 2.0 * r.eta;
  r.implication_holds = !r.premise_holds || r.modal_length < r.mean_length;
  return r;
}

inline SizeComparison
compare_prediction_sizes(const GmSpec& spec, std::span<const double> x, double alpha)
{
  return compare_prediction_sizes(spec.mixture_at(x), alpha);
}

} // namespace modalreg
