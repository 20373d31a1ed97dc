#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "modes.hpp"
#include "parallel.hpp"

namespace modalreg {

struct ClusterSummary
{
  int label = 0;
  std::size_t count = 0;   // N_j
  double proportion = 0.0; // N_j / n
  double dispersion = 0.0; // mean squared distance of Y_i to its destination
};

//! Conditional clustering by basins of attraction. Label 0 marks an
//! observation whose ascent did not converge or whose destination matched no
//! mode of the modal set; such observations still count in n.
struct ClusterModel
{
  std::vector<double> destination;
  std::vector<int> label;
  std::vector<ClusterSummary> clusters; // ascending label, N_j >= 1
  std::size_t unassigned = 0;
};

namespace detail {
//! Index of the mesh point nearest to x (exact match for meshes built from
//! the data).
inline std::size_t
nearest_query(const PointSet& mesh, std::span<const double> x)
{
  if (mesh.dim() == 1) {
    const auto& c = mesh.coords();
    auto it = std::lower_bound(c.begin(), c.end(), x[0]);
    std::size_t q = static_cast<std::size_t>(it - c.begin());
    if (q == c.size() || (q > 0 && x[0] - c[q - 1] <= c[q] - x[0]))
      --q;
    return q;
  }
  std::size_t best = 0;
  double bd = infinity;
  for (std::size_t q = 0; q < mesh.size(); ++q) {
    const double d = squared_distance(mesh[q], x);
    if (d < bd) {
      bd = d;
      best = q;
    }
  }
  return best;
}
} // namespace detail

//! Ascends from every observation (X_i, Y_i) to its destination and labels it
//! with the manifold of the nearest mode of `modal` at X_i, if that mode lies
//! within link_tol_factor * h of the destination.
inline ClusterModel
assign_clusters(const KdeModel& model, const ModalSet& modal, const ModeSearchOptions& opts = {})
{
  const DataSet& data = model.data();
  const std::size_t n = data.size();
  if (modal.size() == 0 || modal.queries.dim() != model.dim())
    throw InvalidArgument("assign_clusters: modal set does not match the model");
  const double link_tol = opts.link_tol_factor * model.h();

  ClusterModel out;
  out.destination.resize(n);
  out.label.assign(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const ConditionalSlice slice(model, data.x(i));
    const ModePoint m = detail::ascend(slice, data.y(i), ascent_tolerances(slice, opts), opts);
    out.destination[i] = m.y;
    if (!m.converged)
      return;
    const std::size_t q = detail::nearest_query(modal.queries, data.x(i));
    double best = infinity;
    for (std::size_t k = 0; k < modal.modes[q].size(); ++k) {
      const double d = std::abs(modal.modes[q][k].y - m.y);
      if (d <= link_tol && d < best) {
        best = d;
        out.label[i] = modal.labels[q][k];
      }
    }
  });

  std::map<int, ClusterSummary> by_label;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.label[i] == 0) {
      ++out.unassigned;
      continue;
    }
    ClusterSummary& c = by_label[out.label[i]];
    c.label = out.label[i];
    ++c.count;
    const double r = data.y(i) - out.destination[i];
    c.dispersion += r * r;
  }
  for (auto& [label, c] : by_label) {
    c.proportion = static_cast<double>(c.count) / static_cast<double>(n);
    c.dispersion /= static_cast<double>(c.count);
    out.clusters.push_back(c);
  }
  return out;
}

//! Mesh made of the observed covariates, sorted so that manifold labels do
//! not depend on the order of the observations.
inline PointSet
data_mesh(const DataSet& data)
{
  const std::size_t n = data.size(), d = data.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto xa = data.x(a), xb = data.x(b);
    return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end());
  });
  PointSet mesh(d);
  for (std::size_t i : order)
    mesh.push_back(data.x(i));
  return mesh;
}

//! Modal set over the observed covariates followed by assign_clusters.
inline ClusterModel
cluster(const KdeModel& model, const ModeSearchOptions& opts = {})
{
  return assign_clusters(model, build_modal_set(model, data_mesh(model.data()), opts), opts);
}

} // namespace modalreg
