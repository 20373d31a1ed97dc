#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "density.hpp"
#include "parallel.hpp"
#include "set_metrics.hpp"

namespace modalreg {

//! Stopping rules and start policy for partial mean-shift. Tolerances are
//! relative so the search is unit-free.
struct ModeSearchOptions
{
  double tol_step_rel = 1e-8;        // times max(range of y, h)
  double tol_grad_rel = 1e-6;        // times the gradient scale at x, see ascent_tolerances
  std::size_t max_iter = 500;
  double merge_tol_factor = 0.1;     // times h
  double link_tol_factor = 1.0;      // times h
  std::size_t grid_starts = 50;      // uniform grid over y_bounds
  double start_radius_factor = 3.0;  // data within this many h of x seed starts
  double absorb_factor = 1e-3;       // times h; see conditional_modes
  //! Mode searches replace a mean-shift step by a Newton step where the
  //! slice is concave and the Newton step goes further the same way (at most
  //! h/2) and still increases the density. mean_shift_ascent ignores this.
  bool newton_polish = true;
};

//! One element of the estimated conditional mode set.
struct ModePoint
{
  std::vector<double> x;
  double y = 0.0;
  double p_yy = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

//! Absolute tolerances at a given x.
struct AscentTolerances
{
  double tol_step = 0.0;
  double tol_grad = 0.0;
};

inline AscentTolerances
ascent_tolerances(const ConditionalSlice& slice, const ModeSearchOptions& opts = {})
{
  const Interval& yb = slice.y_bounds();
  const double h = slice.h();
  AscentTolerances tol;
  tol.tol_step = opts.tol_step_rel * std::max(yb.length(), h);

  // Largest |p_y| any slice with this marginal mass can have: all weight on
  // one kernel, evaluated one bandwidth from its centre.
  const double peak = slice.marginal() * inv_sqrt_2pi * std::exp(-0.5) / (h * h);
  tol.tol_grad = opts.tol_grad_rel * peak;
  return tol;
}

namespace detail {

//! Mean-shift from y0 on a prepared slice. Stops once a step is at most
//! tol_step and the gradient at the current iterate is at most tol_grad.
//! When `known` is given, an iterate within `absorb` of a converged mode
//! returns that mode.
inline ModePoint
ascend(const ConditionalSlice& slice,
       double y0,
       const AscentTolerances& tol,
       const ModeSearchOptions& opts,
       std::vector<double>* trace = nullptr,
       std::span<const ModePoint> known = {},
       double absorb = 0.0)
{
  ModePoint out;
  out.x.assign(slice.x().begin(), slice.x().end());
  double y = y0;
  if (trace)
    trace->push_back(y);

  std::optional<double> fallback; // mean-shift step behind a Newton trial
  double last_p = 0.0;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    for (const ModePoint& m : known) {
      if (m.converged && std::abs(y - m.y) <= absorb) {
        ModePoint hit = m;
        hit.iterations = it;
        return hit;
      }
    }
    const ConditionalSlice::Step s = slice.mean_shift(y);
    if (fallback) {
      const double back = *fallback;
      fallback.reset();
      if (!(s.p > last_p && s.p_yy < 0.0)) {
        y = back;
        if (trace)
          trace->back() = y;
        continue;
      }
    }
    if (std::abs(s.next_y - y) <= tol.tol_step && std::abs(s.p_y) <= tol.tol_grad) {
      out.y = y;
      out.iterations = it;
      out.p_yy = s.p_yy;
      out.converged = out.p_yy < 0.0;
      return out;
    }
    double next = s.next_y;
    if (opts.newton_polish && s.p_yy < 0.0) {
      const double shift = s.next_y - y;
      const double newton = -s.p_y / s.p_yy;
      if (newton * shift > 0.0 && std::abs(newton) > std::abs(shift) && std::abs(newton) <= 0.5 * slice.h()) {
        fallback = s.next_y;
        last_p = s.p;
        next = y + newton;
      }
    }
    y = next;
    if (trace)
      trace->push_back(y);
  }

  const ConditionalSlice::Value v = slice.eval(y);
  out.y = y;
  out.iterations = opts.max_iter;
  out.p_yy = v.p_yy;
  out.converged = false;
  return out;
}

} // namespace detail

//! Partial mean-shift at fixed x starting from y0. Non-mode fixed points
//! (p_yy >= 0) and runs hitting max_iter come back with converged = false.
//! If `trace` is given it receives every iterate, starting with y0.
inline ModePoint
mean_shift_ascent(const KdeModel& model,
                  std::span<const double> x,
                  double y0,
                  const ModeSearchOptions& opts = {},
                  std::vector<double>* trace = nullptr)
{
  if (!std::isfinite(y0))
    throw InvalidArgument("mean_shift_ascent: start must be finite");
  ConditionalSlice slice(model, x);
  slice.require_support();
  ModeSearchOptions pure = opts;
  pure.newton_polish = false;
  return detail::ascend(slice, y0, ascent_tolerances(slice, opts), pure, trace);
}

//! Default start policy: responses of observations within
//! start_radius_factor * h of x, plus a uniform grid over y_bounds.
inline std::vector<double>
default_starts(const KdeModel& model, std::span<const double> x, const ModeSearchOptions& opts = {})
{
  const DataSet& data = model.data();
  const double r2 = std::pow(opts.start_radius_factor * model.h(), 2);
  std::vector<double> starts;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (detail::squared_distance(x, data.x(i)) <= r2)
      starts.push_back(data.y(i));
  const Interval yb = data.y_bounds();
  const std::size_t g = opts.grid_starts;
  if (g == 1 || (g > 0 && yb.length() == 0.0)) {
    starts.push_back(0.5 * (yb.lo + yb.hi));
  } else {
    for (std::size_t k = 0; k < g; ++k)
      starts.push_back(yb.lo + yb.length() * static_cast<double>(k) / static_cast<double>(g - 1));
  }
  return starts;
}

namespace detail {

//! Merges converged points closer than merge_tol, keeping the highest-density
//! representative of each group.
inline std::vector<ModePoint>
merge_modes(const ConditionalSlice& slice, std::vector<ModePoint> found, double merge_tol)
{
  std::sort(found.begin(), found.end(), [](const ModePoint& a, const ModePoint& b) { return a.y < b.y; });
  std::vector<ModePoint> out;
  std::vector<double> best_p;
  for (ModePoint& m : found) {
    const double p = slice.eval(m.y).p;
    if (!out.empty() && m.y - out.back().y <= merge_tol) {
      if (p > best_p.back()) {
        out.back() = std::move(m);
        best_p.back() = p;
      }
      continue;
    }
    out.push_back(std::move(m));
    best_p.push_back(p);
  }
  return out;
}

//! Multi-start search on a prepared slice; see conditional_modes.
inline std::vector<ModePoint>
modes_on_slice(const ConditionalSlice& slice, std::vector<double> starts, const ModeSearchOptions& opts)
{
  if (!slice.in_support())
    return {};
  const AscentTolerances tol = ascent_tolerances(slice, opts);
  const double h = slice.h();
  const double merge_tol = opts.merge_tol_factor * h;
  const double absorb = opts.absorb_factor * h;

  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  if (starts.empty())
    return {};

  std::vector<std::optional<ModePoint>> result(starts.size());
  std::vector<ModePoint> found;
  auto run = [&](std::size_t i) {
    if (!result[i]) {
      result[i] = ascend(slice, starts[i], tol, opts, nullptr, found, absorb);
      if (result[i]->converged)
        found.push_back(*result[i]);
    }
  };
  auto same_limit = [&](std::size_t a, std::size_t b) {
    return result[a]->converged && result[b]->converged &&
           std::abs(result[a]->y - result[b]->y) <= merge_tol;
  };

  // The partial mean-shift map is nondecreasing in y (it is the mean of an
  // exponentially tilted weight vector), so every start between two starts
  // with a common limit shares that limit. Only intervals whose endpoints
  // disagree need to be split.
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  run(0);
  run(starts.size() - 1);
  stack.emplace_back(0, starts.size() - 1);
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi - lo <= 1 || same_limit(lo, hi))
      continue;
    const std::size_t mid = lo + (hi - lo) / 2;
    run(mid);
    stack.emplace_back(mid, hi);
    stack.emplace_back(lo, mid);
  }

  return merge_modes(slice, std::move(found), merge_tol);
}

} // namespace detail

//! The estimated conditional mode set at x: deduplicated converged ascents
//! from the default starts plus `extra_starts`. Returns an empty set when x
//! lies outside the support (below the marginal floor) or nothing converges.
inline std::vector<ModePoint>
conditional_modes(const KdeModel& model,
                  std::span<const double> x,
                  const ModeSearchOptions& opts = {},
                  std::span<const double> extra_starts = {})
{
  ConditionalSlice slice(model, x);
  std::vector<double> starts = default_starts(model, x, opts);
  starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
  return detail::modes_on_slice(slice, std::move(starts), opts);
}

//! Ascent from an explicit, non-empty list of starts only.
inline std::vector<ModePoint>
conditional_modes_from(const KdeModel& model,
                       std::span<const double> x,
                       std::span<const double> starts,
                       const ModeSearchOptions& opts = {})
{
  if (starts.empty())
    throw InvalidArgument("conditional_modes_from: starts must be non-empty");
  ConditionalSlice slice(model, x);
  return detail::modes_on_slice(slice, std::vector<double>(starts.begin(), starts.end()), opts);
}

inline FiniteSet1D
mode_values(std::span<const ModePoint> modes)
{
  std::vector<double> ys;
  ys.reserve(modes.size());
  for (const ModePoint& m : modes)
    ys.push_back(m.y);
  return FiniteSet1D(std::move(ys));
}

//! Estimated modal set over a mesh with manifold labels 1..num_manifolds.
struct ModalSet
{
  PointSet queries;
  std::vector<std::vector<ModePoint>> modes; // per query, ascending y
  std::vector<std::vector<int>> labels;      // parallel to modes
  std::size_t num_manifolds = 0;
  double h = 0.0;

  std::size_t size() const { return queries.size(); }
  FiniteSet1D mode_set(std::size_t q) const { return mode_values(modes[q]); }

  std::size_t total_modes() const
  {
    std::size_t t = 0;
    for (const auto& m : modes)
      t += m.size();
    return t;
  }
};

//! Equispaced mesh: `per_dim` points per axis over each interval, with a
//! fraction `trim` of the length removed at both ends.
inline PointSet
make_mesh(std::span<const Interval> bounds, std::size_t per_dim, double trim = 0.0)
{
  if (bounds.empty() || per_dim == 0)
    throw InvalidArgument("make_mesh: need at least one dimension and one point");
  const std::size_t d = bounds.size();
  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double lo = bounds[k].lo + trim * bounds[k].length();
    const double hi = bounds[k].hi - trim * bounds[k].length();
    for (std::size_t j = 0; j < per_dim; ++j)
      axes[k].push_back(per_dim == 1 ? 0.5 * (lo + hi)
                                     : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(per_dim - 1));
  }
  PointSet mesh(d);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> p(d);
  for (;;) {
    for (std::size_t k = 0; k < d; ++k)
      p[k] = axes[k][idx[k]];
    mesh.push_back(p);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++idx[k] < per_dim)
        break;
      idx[k] = 0;
      if (k == 0)
        return mesh;
    }
  }
}

namespace detail {

class DisjointSets
{
public:
  explicit DisjointSets(std::size_t n)
    : parent_(n)
  {
    std::iota(parent_.begin(), parent_.end(), std::size_t{ 0 });
  }

  std::size_t find(std::size_t a)
  {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b)
      parent_[std::max(a, b)] = std::min(a, b);
  }

private:
  std::vector<std::size_t> parent_;
};

//! Mesh adjacency: consecutive points for d = 1, otherwise a symmetric
//! k-nearest-neighbour graph with k = 2d.
inline std::vector<std::pair<std::size_t, std::size_t>>
mesh_edges(const PointSet& mesh)
{
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t m = mesh.size();
  if (mesh.dim() == 1) {
    for (std::size_t i = 0; i + 1 < m; ++i)
      edges.emplace_back(i, i + 1);
    return edges;
  }
  const std::size_t k = std::min<std::size_t>(2 * mesh.dim(), m > 0 ? m - 1 : 0);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k + 1, m)), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = squared_distance(mesh[i], mesh[a]);
                        const double db = squared_distance(mesh[i], mesh[b]);
                        return da < db || (da == db && a < b);
                      });
    for (std::size_t j = 0, added = 0; j < m && added < k; ++j) {
      if (order[j] == i)
        continue;
      edges.emplace_back(std::min(i, order[j]), std::max(i, order[j]));
      ++added;
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

} // namespace detail

//! Assigns manifold labels: mode points at adjacent mesh queries are linked
//! when their y-values differ by at most link_tol; labels are the connected
//! components, numbered in order of first appearance along the mesh.
inline void
label_manifolds(ModalSet& set, double link_tol)
{
  std::vector<std::size_t> offset(set.size() + 1, 0);
  for (std::size_t q = 0; q < set.size(); ++q)
    offset[q + 1] = offset[q] + set.modes[q].size();
  detail::DisjointSets sets(offset.back());

  for (auto [a, b] : detail::mesh_edges(set.queries))
    for (std::size_t i = 0; i < set.modes[a].size(); ++i)
      for (std::size_t j = 0; j < set.modes[b].size(); ++j)
        if (std::abs(set.modes[a][i].y - set.modes[b][j].y) <= link_tol)
          sets.unite(offset[a] + i, offset[b] + j);

  std::vector<int> root_label(offset.back(), 0);
  int next = 0;
  set.labels.assign(set.size(), {});
  for (std::size_t q = 0; q < set.size(); ++q) {
    for (std::size_t i = 0; i < set.modes[q].size(); ++i) {
      const std::size_t r = sets.find(offset[q] + i);
      if (root_label[r] == 0)
        root_label[r] = ++next;
      set.labels[q].push_back(root_label[r]);
    }
  }
  set.num_manifolds = static_cast<std::size_t>(next);
}

//! Conditional modes at every mesh point, then manifold labelling. For d = 1
//! the mesh must be sorted ascending.
inline ModalSet
build_modal_set(const KdeModel& model, const PointSet& mesh, const ModeSearchOptions& opts = {})
{
  if (mesh.empty())
    throw InvalidArgument("build_modal_set: mesh must be non-empty");
  if (mesh.dim() != model.dim())
    throw InvalidArgument("build_modal_set: mesh dimension does not match the data");
  if (mesh.dim() == 1)
    for (std::size_t i = 1; i < mesh.size(); ++i)
      if (mesh[i][0] < mesh[i - 1][0])
        throw InvalidArgument("build_modal_set: a 1-d mesh must be sorted ascending");

  ModalSet set;
  set.queries = mesh;
  set.h = model.h();
  set.modes.resize(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t q) { set.modes[q] = conditional_modes(model, mesh[q], opts); });
  label_manifolds(set, opts.link_tol_factor * model.h());
  return set;
}

} // namespace modalreg
