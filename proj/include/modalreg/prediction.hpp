#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "inference.hpp"
#include "modes.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "set_metrics.hpp"

namespace modalreg {

//! p(Y in M + eps | x) with overlapping dilation intervals merged.
inline double
band_mass(const ConditionalSlice& slice, const FiniteSet1D& modes, double eps)
{
  double mass = 0.0;
  for (auto [lo, hi] : dilate_intervals(modes, eps))
    mass += slice.conditional_mass(lo, hi);
  return mass;
}

//! eps(x) = inf{eps : p(Y in M(x) + eps | x) >= 1 - alpha}, by bisection on
//! [0, eps_max] where M(x) + eps_max covers y_bounds + 5h. The conditional
//! mass is an exact sum of Gaussian CDF differences.
inline double
pointwise_epsilon(const KdeModel& model,
                  std::span<const double> x,
                  double alpha,
                  const ModeSearchOptions& opts = {})
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidArgument("pointwise_epsilon: alpha must lie in (0, 1)");
  const ConditionalSlice slice(model, x);
  slice.require_support();
  const FiniteSet1D modes = mode_values(detail::modes_on_slice(slice, default_starts(model, x, opts), opts));
  if (modes.empty())
    throw NoModeError("pointwise_epsilon: no estimated mode at " + format_point(x));

  const double target = 1.0 - alpha;
  const Interval reach = slice.y_bounds().expanded(5.0 * model.h());
  double hi = std::max(reach.hi - modes[0], modes[modes.size() - 1] - reach.lo);
  if (band_mass(slice, modes, hi) < target)
    throw UnreachableMassError("pointwise_epsilon: coverage 1 - alpha is not reached within y_bounds + 5h at " +
                               format_point(x));
  double lo = 0.0;
  while (hi - lo > 1e-12 * std::max(hi, model.h())) {
    const double mid = 0.5 * (lo + hi);
    (band_mass(slice, modes, mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

//! Distances d(Y_i, M(X_i)) for every observation of `eval`, with the mode
//! sets taken from `model`. An empty mode set gives +inf.
struct Residuals
{
  std::vector<double> distance;
  std::vector<FiniteSet1D> modes;
};

inline Residuals
residual_distances(const KdeModel& model, const DataSet& eval, const ModeSearchOptions& opts = {})
{
  if (eval.dim() != model.dim())
    throw InvalidArgument("residual_distances: dimension mismatch");
  Residuals r;
  r.distance.resize(eval.size());
  r.modes.resize(eval.size());
  parallel_for(eval.size(), [&](std::size_t i) {
    r.modes[i] = mode_values(conditional_modes(model, eval.x(i), opts));
    r.distance[i] = r.modes[i].distance(eval.y(i));
  });
  return r;
}

//! Order statistic ceil((1 - alpha) n) of the residual distances.
inline double
uniform_epsilon(std::span<const double> residuals, double alpha)
{
  return empirical_quantile(std::vector<double>(residuals.begin(), residuals.end()), alpha);
}

//! Uniform width from the model's own training residuals.
inline double
uniform_epsilon(const KdeModel& model, double alpha, const ModeSearchOptions& opts = {})
{
  return uniform_epsilon(residual_distances(model, model.data(), opts).distance, alpha);
}

//! Random split of n rows into train and validation parts.
struct Split
{
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

inline Split
split_rows(std::size_t n, std::uint64_t seed, double train_fraction = 0.5)
{
  if (n < 2)
    throw InvalidArgument("split: at least two observations are required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("split: train fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{ 0 });
  Rng rng = make_stream(seed, { 0x73706c6974 });
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i)(rng);
    std::swap(perm[i], perm[j]);
  }
  std::size_t k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n - 1);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

//! Cross-validated uniform width: manifolds from the train part, width from
//! the validation residuals.
struct CvEpsilon
{
  double epsilon = 0.0;
  KdeModel train_model;
  std::vector<double> residuals;
};

inline CvEpsilon
uniform_epsilon_cv(const DataSet& data,
                   double h,
                   double alpha,
                   std::uint64_t seed,
                   double train_fraction = 0.5,
                   const ModeSearchOptions& opts = {})
{
  const Split s = split_rows(data.size(), seed, train_fraction);
  KdeModel train(data.subset(s.train), h);
  auto r = residual_distances(train, data.subset(s.validation), opts);
  const double eps = uniform_epsilon(r.distance, alpha);
  return { eps, std::move(train), std::move(r.distance) };
}

//! Trapezoidal integral over a 1-d mesh of per-point values.
inline double
trapezoid(const PointSet& mesh, std::span<const double> values)
{
  if (mesh.dim() != 1)
    throw Unsupported("volume quadrature is implemented for one covariate only");
  double v = 0.0;
  for (std::size_t q = 1; q < mesh.size(); ++q)
    v += 0.5 * (values[q] + values[q - 1]) * (mesh[q][0] - mesh[q - 1][0]);
  return v;
}

//! Lebesgue measure of {(x, y) : y in M(x) + eps} over the mesh range, with
//! overlapping dilations merged at every x.
inline double
uniform_volume(const ModalSet& modal, double epsilon)
{
  if (!(epsilon >= 0.0))
    throw InvalidArgument("uniform_volume: epsilon must be >= 0");
  if (std::isinf(epsilon))
    return infinity;
  std::vector<double> len(modal.size());
  for (std::size_t q = 0; q < modal.size(); ++q)
    len[q] = dilate_length(modal.mode_set(q), epsilon);
  return trapezoid(modal.queries, len);
}

//! Prediction band on a mesh: widths (one per mesh point, or a single one),
//! the per-x lengths of the dilated mode sets, and their integral.
struct PredictionBand
{
  enum class Kind
  {
    pointwise,
    uniform
  };
  Kind kind = Kind::uniform;
  std::vector<double> epsilon;
  double alpha = 0.0;
  std::vector<double> length;
  double volume = 0.0;
  PointSet mesh;
  std::vector<FiniteSet1D> estimate;

  double width(std::size_t q) const { return kind == Kind::uniform ? epsilon.front() : epsilon[q]; }
  bool covers(std::size_t q, double y) const { return estimate[q].distance(y) <= width(q); }
};

namespace detail {
inline void
fill_lengths(PredictionBand& band)
{
  band.length.resize(band.mesh.size());
  for (std::size_t q = 0; q < band.mesh.size(); ++q)
    band.length[q] = std::isinf(band.width(q)) ? infinity : dilate_length(band.estimate[q], band.width(q));
  band.volume = band.mesh.dim() == 1 ? trapezoid(band.mesh, band.length) : 0.0;
}
} // namespace detail

//! Pointwise band: eps(x) at every mesh point. Mesh points without modes get
//! an infinite width.
inline PredictionBand
pointwise_prediction_band(const KdeModel& model,
                          const PointSet& mesh,
                          double alpha,
                          const ModeSearchOptions& opts = {})
{
  PredictionBand band;
  band.kind = PredictionBand::Kind::pointwise;
  band.alpha = alpha;
  band.mesh = mesh;
  band.epsilon.resize(mesh.size());
  band.estimate.resize(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t q) {
    band.estimate[q] = mode_values(conditional_modes(model, mesh[q], opts));
    band.epsilon[q] = band.estimate[q].empty() ? infinity : pointwise_epsilon(model, mesh[q], alpha, opts);
  });
  detail::fill_lengths(band);
  return band;
}

//! Uniform band: one width from residual distances around the modal set.
inline PredictionBand
uniform_prediction_band(const ModalSet& modal, double epsilon, double alpha)
{
  PredictionBand band;
  band.kind = PredictionBand::Kind::uniform;
  band.alpha = alpha;
  band.mesh = modal.queries;
  band.epsilon = { epsilon };
  for (std::size_t q = 0; q < modal.size(); ++q)
    band.estimate.push_back(modal.mode_set(q));
  detail::fill_lengths(band);
  return band;
}

} // namespace modalreg
