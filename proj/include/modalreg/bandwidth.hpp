#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "modes.hpp"
#include "prediction.hpp"

namespace modalreg {

//! Normal-reference bandwidth for the (d+1)-variate pooled data:
//! (4/(d+3))^{1/(d+5)} n^{-1/(d+5)} s, with s the root mean of the
//! per-coordinate sample variances of (x, y).
inline double
rule_of_thumb_bandwidth(const DataSet& data)
{
  const std::size_t n = data.size(), d = data.dim();
  if (n < 2)
    throw InvalidArgument("rule_of_thumb_bandwidth: at least two observations are required");
  double total_var = 0.0;
  auto add_var = [&](auto&& value) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += value(i);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      ss += (value(i) - mean) * (value(i) - mean);
    total_var += ss / static_cast<double>(n - 1);
  };
  for (std::size_t k = 0; k < d; ++k)
    add_var([&](std::size_t i) { return data.x(i)[k]; });
  add_var([&](std::size_t i) { return data.y(i); });
  const double s = std::sqrt(total_var / static_cast<double>(d + 1));
  if (!(s > 0.0))
    throw InvalidArgument("rule_of_thumb_bandwidth: the data have no spread");
  const double dd = static_cast<double>(d);
  return std::pow(4.0 / (dd + 3.0), 1.0 / (dd + 5.0)) * std::pow(static_cast<double>(n), -1.0 / (dd + 5.0)) * s;
}

//! `count` log-spaced bandwidths from lo_factor to hi_factor times the
//! rule-of-thumb bandwidth, ascending.
inline std::vector<double>
default_bandwidth_grid(const DataSet& data, std::size_t count = 20, double lo_factor = 0.2, double hi_factor = 2.0)
{
  if (count == 0 || !(lo_factor > 0.0) || !(hi_factor >= lo_factor))
    throw InvalidArgument("default_bandwidth_grid: need count >= 1 and 0 < lo <= hi");
  const double h0 = rule_of_thumb_bandwidth(data);
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    grid[k] = h0 * lo_factor * std::pow(hi_factor / lo_factor, t);
  }
  return grid;
}

struct SelectionConfig
{
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  std::size_t mesh_points = 50; // mesh over the covariate range for the volume
};

//! One grid point of the selection curve. `ok` is false when the train fit
//! has no modes anywhere on the mesh.
struct BandwidthPoint
{
  double h = 0.0;
  double volume = infinity;
  std::size_t num_manifolds = 0;
  double epsilon = infinity;
  bool ok = false;
};

struct BandwidthSelection
{
  double h = 0.0;
  std::size_t index = 0;
  std::vector<BandwidthPoint> curve;
};

//! Fits manifolds on the train split for every h, takes the uniform width
//! from the validation residuals and returns the h minimising the volume of
//! the resulting prediction band. Ties go to the larger h. One covariate.
inline BandwidthSelection
select_bandwidth(const DataSet& data,
                 std::span<const double> h_grid,
                 const SelectionConfig& cfg = {},
                 const ModeSearchOptions& opts = {})
{
  if (h_grid.empty())
    throw InvalidArgument("select_bandwidth: the bandwidth grid is empty");
  for (std::size_t k = 0; k < h_grid.size(); ++k) {
    if (!(h_grid[k] > 0.0) || !std::isfinite(h_grid[k]))
      throw InvalidArgument("select_bandwidth: bandwidths must be positive and finite");
    if (k > 0 && !(h_grid[k] > h_grid[k - 1]))
      throw InvalidArgument("select_bandwidth: the bandwidth grid must be strictly ascending");
  }
  if (data.dim() != 1)
    throw Unsupported("select_bandwidth: the volume criterion is implemented for one covariate only");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw InvalidArgument("select_bandwidth: alpha must lie in (0, 1)");
  if (cfg.mesh_points < 2)
    throw InvalidArgument("select_bandwidth: at least two mesh points are required");

  const Split split = split_rows(data.size(), cfg.seed, cfg.train_fraction);
  const auto train = std::make_shared<const DataSet>(data.subset(split.train));
  const DataSet validation = data.subset(split.validation);
  const PointSet mesh = make_mesh(data.x_bounds(), cfg.mesh_points);

  BandwidthSelection out;
  for (double h : h_grid) {
    BandwidthPoint pt;
    pt.h = h;
    const KdeModel model(train, h);
    const ModalSet modal = build_modal_set(model, mesh, opts);
    if (modal.total_modes() > 0) {
      pt.epsilon = uniform_epsilon(residual_distances(model, validation, opts).distance, cfg.alpha);
      pt.volume = uniform_volume(modal, pt.epsilon);
      pt.num_manifolds = modal.num_manifolds;
      pt.ok = std::isfinite(pt.volume);
    }
    out.curve.push_back(pt);
  }

  bool any = false;
  for (std::size_t k = 0; k < out.curve.size(); ++k)
    if (out.curve[k].ok && (!any || out.curve[k].volume <= out.curve[out.index].volume)) {
      out.index = k;
      any = true;
    }
  if (!any)
    throw SelectionFailure("select_bandwidth: no bandwidth in the grid produced a finite prediction band");
  out.h = out.curve[out.index].h;
  return out;
}

} // namespace modalreg
