#pragma once

#include <string>
#include <vector>

#include "bandwidth.hpp"
#include "clustering.hpp"
#include "experiments.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "modes.hpp"
#include "prediction.hpp"
#include "ridge.hpp"

namespace modalreg {

//! "x" for one covariate, x1..xd otherwise.
inline std::vector<std::string>
x_columns(std::size_t d)
{
  if (d == 1)
    return { "x" };
  std::vector<std::string> names;
  for (std::size_t k = 0; k < d; ++k)
    names.push_back("x" + std::to_string(k + 1));
  return names;
}

namespace detail {
inline std::vector<double>
row_with_x(double first, std::span<const double> x)
{
  std::vector<double> r{ first };
  r.insert(r.end(), x.begin(), x.end());
  return r;
}
} // namespace detail

//! mesh_index, x..., y, p_yy, label; one row per mode.
inline CsvTable
modal_set_table(const ModalSet& modal)
{
  CsvTable t;
  t.header = { "mesh_index" };
  for (auto& c : x_columns(modal.queries.dim()))
    t.header.push_back(c);
  t.header.insert(t.header.end(), { "y", "p_yy", "label" });
  for (std::size_t q = 0; q < modal.size(); ++q)
    for (std::size_t k = 0; k < modal.modes[q].size(); ++k) {
      auto r = detail::row_with_x(static_cast<double>(q), modal.queries[q]);
      r.push_back(modal.modes[q][k].y);
      r.push_back(modal.modes[q][k].p_yy);
      r.push_back(modal.labels[q][k]);
      t.rows.push_back(std::move(r));
    }
  return t;
}

inline json
modal_set_summary(const ModalSet& modal)
{
  std::size_t empty = 0;
  for (const auto& m : modal.modes)
    empty += m.empty();
  return { { "h", modal.h },
           { "mesh_points", modal.size() },
           { "total_modes", modal.total_modes() },
           { "num_manifolds", modal.num_manifolds },
           { "empty_points", empty } };
}

//! mesh_index, x..., y, <width_name>; one row per estimated mode.
template<class Band>
CsvTable
band_table(const Band& band, const std::string& width_name)
{
  CsvTable t;
  t.header = { "mesh_index" };
  for (auto& c : x_columns(band.mesh.dim()))
    t.header.push_back(c);
  t.header.insert(t.header.end(), { "y", width_name });
  for (std::size_t q = 0; q < band.mesh.size(); ++q)
    for (double y : band.estimate[q].points()) {
      auto r = detail::row_with_x(static_cast<double>(q), band.mesh[q]);
      r.push_back(y);
      r.push_back(band.width(q));
      t.rows.push_back(std::move(r));
    }
  return t;
}

inline CsvTable
selection_table(const BandwidthSelection& sel)
{
  CsvTable t;
  t.header = { "h", "volume", "num_manifolds", "epsilon", "ok" };
  for (const auto& p : sel.curve)
    t.rows.push_back({ p.h, p.volume, static_cast<double>(p.num_manifolds), p.epsilon, p.ok ? 1.0 : 0.0 });
  return t;
}

inline CsvTable
cluster_table(const DataSet& data, const ClusterModel& c)
{
  CsvTable t;
  t.header = { "index" };
  for (std::size_t k = 0; k < data.dim(); ++k)
    t.header.push_back("x" + std::to_string(k + 1));
  t.header.insert(t.header.end(), { "y", "destination", "label" });
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = detail::row_with_x(static_cast<double>(i), data.x(i));
    r.push_back(data.y(i));
    r.push_back(c.destination[i]);
    r.push_back(c.label[i]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline json
cluster_summary(const ClusterModel& c)
{
  json clusters = json::array();
  for (const auto& k : c.clusters)
    clusters.push_back({ { "label", k.label },
                         { "count", k.count },
                         { "proportion", json_number(k.proportion) },
                         { "dispersion", json_number(k.dispersion) } });
  return { { "clusters", clusters }, { "unassigned", c.unassigned } };
}

inline CsvTable
ridge_table(const RidgeScanReport& scan)
{
  CsvTable t;
  t.header = { "mesh_index", "x", "y", "abs_projected_gradient", "curvature", "stationary", "cross_free", "member", "violation" };
  for (const auto& e : scan.entries)
    t.rows.push_back({ static_cast<double>(e.query),
                       e.x,
                       e.y,
                       std::abs(e.ridge.projected_gradient),
                       e.ridge.curvature,
                       e.stationary ? 1.0 : 0.0,
                       e.cross_free ? 1.0 : 0.0,
                       e.ridge.member ? 1.0 : 0.0,
                       e.violation ? 1.0 : 0.0 });
  return t;
}

inline json
ridge_summary(const RidgeScanReport& s)
{
  return { { "mode_points", s.mode_points },
           { "members", s.members },
           { "stationary", s.stationary },
           { "cross_free", s.cross_free },
           { "premised", s.premised },
           { "violations", s.violations },
           { "negative_lambda2", s.negative_lambda2 },
           { "worst_violation", json_number(s.worst_violation) },
           { "max_residual", json_number(s.max_residual) } };
}

inline json
line_fit_json(const LineFit& f)
{
  return { { "slope", json_number(f.slope) },
           { "intercept", json_number(f.intercept) },
           { "slope_lo", json_number(f.slope_lo) },
           { "slope_hi", json_number(f.slope_hi) },
           { "level", f.level } };
}

inline CsvTable
rate_table(const RateReport& r)
{
  CsvTable t;
  t.header = { "n",          "h",         "center_error",    "uniform_error",    "mise",
               "mean_modes", "center_mismatch", "uniform_mismatch", "count_mismatch" };
  for (const auto& p : r.points)
    t.rows.push_back({ static_cast<double>(p.n),
                       p.h,
                       p.center_error,
                       p.uniform_error,
                       p.mise,
                       p.mean_modes,
                       static_cast<double>(p.center_mismatch),
                       static_cast<double>(p.uniform_mismatch),
                       static_cast<double>(p.count_mismatch) });
  return t;
}

inline json
rate_json(const RateReport& r)
{
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({ { "n", p.n },
                    { "h", p.h },
                    { "center_error", json_number(p.center_error) },
                    { "uniform_error", json_number(p.uniform_error) },
                    { "mise", json_number(p.mise) },
                    { "mean_modes", p.mean_modes },
                    { "center_mismatch", p.center_mismatch },
                    { "uniform_mismatch", p.uniform_mismatch },
                    { "count_mismatch", p.count_mismatch } });
  return { { "study", "rate" },
           { "points", pts },
           { "uniform_fit", line_fit_json(r.uniform_fit) },
           { "center_fit", line_fit_json(r.center_fit) },
           { "mise_fit", line_fit_json(r.mise_fit) },
           { "decreasing", r.decreasing } };
}

inline CsvTable
coverage_table(const CoverageReport& r)
{
  CsvTable t;
  t.header = { "alpha",           "uniform_coverage", "pointwise_coverage", "mean_uniform_delta",
               "mean_pointwise_delta", "uniform_unstable", "pointwise_unstable" };
  for (const auto& p : r.points)
    t.rows.push_back({ p.alpha,
                       p.uniform_coverage,
                       p.pointwise_coverage,
                       p.mean_uniform_delta,
                       p.mean_pointwise_delta,
                       static_cast<double>(p.uniform_unstable),
                       static_cast<double>(p.pointwise_unstable) });
  return t;
}

inline json
coverage_json(const CoverageReport& r)
{
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({ { "alpha", p.alpha },
                    { "uniform_coverage", p.uniform_coverage },
                    { "pointwise_coverage", p.pointwise_coverage },
                    { "mean_uniform_delta", json_number(p.mean_uniform_delta) },
                    { "mean_pointwise_delta", json_number(p.mean_pointwise_delta) },
                    { "uniform_unstable", p.uniform_unstable },
                    { "pointwise_unstable", p.pointwise_unstable } });
  return { { "study", "coverage" }, { "n", r.n },       { "B", r.B },          { "reps", r.reps },
           { "h", r.h },            { "center", r.center }, { "points", pts } };
}

} // namespace modalreg
