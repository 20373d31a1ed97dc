#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "modes.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "set_metrics.hpp"

namespace modalreg {

//! Ordinary nonparametric bootstrap: resample (x, y) pairs with replacement.
//! The bandwidth of the original model is reused by every replicate.
struct BootstrapConfig
{
  std::size_t B = 200;
  double alpha = 0.1;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (B < 1)
      throw InvalidArgument("bootstrap: B must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw InvalidArgument("bootstrap: alpha must lie in (0, 1)");
  }
};

//! Order statistic of rank ceil((1 - alpha) m) among m values; +inf sorts
//! above every finite value.
inline double
empirical_quantile(std::vector<double> values, double alpha)
{
  if (values.empty())
    throw InvalidArgument("empirical_quantile: no values");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidArgument("empirical_quantile: alpha must lie in (0, 1)");
  const double m = static_cast<double>(values.size());
  // The small offset keeps products such as 0.9 * 200 from rounding up.
  std::size_t k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * m - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  return values[k - 1];
}

//! Hausdorff distances between bootstrap and original mode sets, one row per
//! replicate and one column per mesh point.
struct BootstrapReplicates
{
  PointSet mesh;
  std::vector<FiniteSet1D> estimate; // original mode set per mesh point
  std::size_t B = 0;
  std::vector<double> distance;      // B x mesh.size(), row-major

  double at(std::size_t b, std::size_t q) const { return distance[b * mesh.size() + q]; }

  std::vector<double> column(std::size_t q) const
  {
    std::vector<double> c(B);
    for (std::size_t b = 0; b < B; ++b)
      c[b] = at(b, q);
    return c;
  }

  //! Per-replicate supremum over the mesh.
  std::vector<double> sup_distance() const
  {
    std::vector<double> s(B, 0.0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t q = 0; q < mesh.size(); ++q)
        s[b] = std::max(s[b], at(b, q));
    return s;
  }
};

//! Rows of a bootstrap resample for replicate b.
inline std::vector<std::size_t>
bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t b)
{
  Rng rng = make_stream(seed, { 0x626f6f74, b });
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows)
    r = pick(rng);
  return rows;
}

//! Resamples the data B times and records Haus(M*_b(x), M(x)) at every mesh
//! point. Replicate searches start from the original modes as well as the
//! default starts.
inline BootstrapReplicates
bootstrap_replicates(const KdeModel& model,
                     const PointSet& mesh,
                     const BootstrapConfig& cfg,
                     const ModeSearchOptions& opts = {})
{
  cfg.validate();
  if (mesh.empty())
    throw InvalidArgument("bootstrap: mesh must be non-empty");
  if (mesh.dim() != model.dim())
    throw InvalidArgument("bootstrap: mesh dimension does not match the data");

  BootstrapReplicates out;
  out.mesh = mesh;
  out.B = cfg.B;
  const std::size_t m = mesh.size();
  std::vector<std::vector<double>> seeds(m);
  out.estimate.resize(m);
  parallel_for(m, [&](std::size_t q) {
    auto modes = conditional_modes(model, mesh[q], opts);
    out.estimate[q] = mode_values(modes);
    seeds[q].assign(out.estimate[q].points().begin(), out.estimate[q].points().end());
  });
  if (std::all_of(out.estimate.begin(), out.estimate.end(), [](const auto& s) { return s.empty(); }))
    throw NoModeError("bootstrap: the estimated mode set is empty at every mesh point");

  out.distance.assign(cfg.B * m, 0.0);
  parallel_for(cfg.B, [&](std::size_t b) {
    const auto rows = bootstrap_rows(model.n(), cfg.seed, b);
    const KdeModel boot(model.data().subset(rows), model.h(), model.kernel());
    for (std::size_t q = 0; q < m; ++q) {
      const auto modes = conditional_modes(boot, mesh[q], opts, seeds[q]);
      out.distance[b * m + q] = hausdorff(mode_values(modes), out.estimate[q]);
    }
  });
  return out;
}

//! Confidence band around the estimated mode sets on a mesh. Pointwise bands
//! carry one width per mesh point, uniform bands a single width. A width of
//! +inf means more than alpha B replicates had a mismatched mode count.
struct ConfidenceBand
{
  enum class Kind
  {
    pointwise,
    uniform
  };
  Kind kind = Kind::pointwise;
  std::vector<double> delta;
  double alpha = 0.0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  PointSet mesh;
  std::vector<FiniteSet1D> estimate;

  double width(std::size_t q) const { return kind == Kind::uniform ? delta.front() : delta[q]; }
  bool unstable(std::size_t q) const { return std::isinf(width(q)); }

  //! Is y inside M(x_q) + delta?
  bool covers(std::size_t q, double y) const { return estimate[q].distance(y) <= width(q); }
};

inline ConfidenceBand
pointwise_band(const BootstrapReplicates& reps, double alpha)
{
  ConfidenceBand band;
  band.kind = ConfidenceBand::Kind::pointwise;
  band.alpha = alpha;
  band.B = reps.B;
  band.mesh = reps.mesh;
  band.estimate = reps.estimate;
  for (std::size_t q = 0; q < reps.mesh.size(); ++q)
    band.delta.push_back(empirical_quantile(reps.column(q), alpha));
  return band;
}

inline ConfidenceBand
uniform_band(const BootstrapReplicates& reps, double alpha)
{
  ConfidenceBand band;
  band.kind = ConfidenceBand::Kind::uniform;
  band.alpha = alpha;
  band.B = reps.B;
  band.mesh = reps.mesh;
  band.estimate = reps.estimate;
  band.delta = { empirical_quantile(reps.sup_distance(), alpha) };
  return band;
}

inline ConfidenceBand
bootstrap_pointwise(const KdeModel& model,
                    std::span<const double> x,
                    const BootstrapConfig& cfg,
                    const ModeSearchOptions& opts = {})
{
  PointSet mesh(model.dim());
  mesh.push_back(x);
  if (conditional_modes(model, x, opts).empty())
    throw NoModeError("bootstrap: no estimated mode at " + format_point(x));
  auto band = pointwise_band(bootstrap_replicates(model, mesh, cfg, opts), cfg.alpha);
  band.seed = cfg.seed;
  return band;
}

inline ConfidenceBand
bootstrap_pointwise(const KdeModel& model,
                    const PointSet& mesh,
                    const BootstrapConfig& cfg,
                    const ModeSearchOptions& opts = {})
{
  auto band = pointwise_band(bootstrap_replicates(model, mesh, cfg, opts), cfg.alpha);
  band.seed = cfg.seed;
  return band;
}

inline ConfidenceBand
bootstrap_uniform(const KdeModel& model,
                  const PointSet& mesh,
                  const BootstrapConfig& cfg,
                  const ModeSearchOptions& opts = {})
{
  auto band = uniform_band(bootstrap_replicates(model, mesh, cfg, opts), cfg.alpha);
  band.seed = cfg.seed;
  return band;
}

} // namespace modalreg
