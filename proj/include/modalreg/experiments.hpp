#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "inference.hpp"
#include "modes.hpp"
#include "parallel.hpp"
#include "prediction.hpp"
#include "random.hpp"
#include "synthdata.hpp"

namespace modalreg {

//! Covariate range over which a one-covariate design is evaluated: the
//! support of a uniform x, else mean +- 2 sd.
inline Interval
study_domain(const Design& design)
{
  validate(design);
  if (design_dim(design) != 1)
    throw Unsupported("studies are implemented for one covariate only");
  if (const auto* g = std::get_if<GmSpec>(&design)) {
    const XDistribution& x = g->x[0];
    if (auto b = x.bounds())
      return *b;
    return { x.a - 2.0 * x.b, x.a + 2.0 * x.b };
  }
  const auto& j = std::get<GaussianJointSpec>(design);
  const double sd = std::sqrt(j.cov[0]);
  return { j.mean[0] - 2.0 * sd, j.mean[0] + 2.0 * sd };
}

//! Evaluation mesh: equispaced, with a fraction `trim` removed at both ends.
inline PointSet
study_mesh(const Design& design, std::size_t points, double trim)
{
  const Interval b[] = { study_domain(design) };
  return make_mesh(b, points, trim);
}

//! Seed for the data set of one replicate, independent of evaluation order.
inline std::uint64_t
replicate_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t n, std::uint64_t rep)
{
  return make_stream(seed, { tag, n, rep })();
}

struct LineFit
{
  double intercept = 0.0;
  double slope = 0.0;
  double slope_lo = 0.0; // Student-t interval at `level`
  double slope_hi = 0.0;
  double level = 0.95;
};

//! Ordinary least squares of y on x with a t interval for the slope. With
//! two points the interval is unbounded.
inline LineFit
fit_line(std::span<const double> x, std::span<const double> y, double level = 0.95)
{
  const std::size_t k = x.size();
  if (k < 2 || y.size() != k)
    throw InvalidArgument("fit_line: need at least two (x, y) pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw InvalidArgument("fit_line: x values are all equal");
  LineFit f;
  f.level = level;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (k == 2) {
    f.slope_lo = -infinity;
    f.slope_hi = infinity;
    return f;
  }
  double ssr = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  const double df = static_cast<double>(k - 2);
  const double se = std::sqrt(ssr / df / sxx);
  const double t = boost::math::quantile(boost::math::students_t(df), 0.5 + 0.5 * level);
  f.slope_lo = f.slope - t * se;
  f.slope_hi = f.slope + t * se;
  return f;
}

struct RateStudyConfig
{
  std::vector<std::size_t> n_grid{ 250, 500, 1000, 2000, 4000 };
  std::size_t reps = 50;
  std::uint64_t seed = 0;
  double h_scale = 0.6;     // h = h_scale * n^{-1/(d+7)}
  std::size_t mesh_points = 30;
  double trim = 0.05;
  double level = 0.95;

  void validate() const
  {
    if (n_grid.size() < 2 || reps < 1)
      throw InvalidArgument("rate_study: need at least two sample sizes and one replicate");
    for (std::size_t k = 0; k < n_grid.size(); ++k)
      if (n_grid[k] < 2 || (k > 0 && n_grid[k] <= n_grid[k - 1]))
        throw InvalidArgument("rate_study: sample sizes must be >= 2 and strictly ascending");
    if (!(h_scale > 0.0) || mesh_points < 2 || !(trim >= 0.0 && trim < 0.5))
      throw InvalidArgument("rate_study: invalid h_scale, mesh_points or trim");
    if (!(level > 0.0 && level < 1.0))
      throw InvalidArgument("rate_study: level must lie in (0, 1)");
  }
};

//! Averages over replicates at one sample size. Replicates whose error is
//! infinite (an empty estimated mode set) are excluded from that average and
//! counted in the matching `*_mismatch` field.
struct RatePoint
{
  std::size_t n = 0;
  double h = 0.0;
  double center_error = 0.0;  // Haus at the middle of the domain
  double uniform_error = 0.0; // sup over the mesh
  double mise = 0.0;          // integral of Haus^2 over the mesh range
  double mean_modes = 0.0;    // modes per mesh point
  std::size_t center_mismatch = 0;
  std::size_t uniform_mismatch = 0;
  std::size_t count_mismatch = 0; // replicates with a wrong mode count somewhere
};

struct RateReport
{
  std::vector<RatePoint> points;
  LineFit uniform_fit; // log uniform_error on log n
  LineFit center_fit;
  LineFit mise_fit;
  bool decreasing = false; // uniform_error strictly decreasing in n

  double slope() const { return uniform_fit.slope; }
};

struct RateReplicate
{
  double center = 0.0, uniform = 0.0, mise = 0.0, modes = 0.0;
  bool count_ok = true;
};

//! One replicate of the rate study: fit on fresh data, compare to the
//! population modes of the design on the mesh.
inline RateReplicate
rate_replicate(const Design& design,
               std::size_t n,
               double h,
               std::uint64_t data_seed,
               const PointSet& mesh,
               std::span<const double> center,
               const ModeSearchOptions& opts = {})
{
  const KdeModel model(generate(design, n, data_seed).data, h);
  const ModalSet modal = build_modal_set(model, mesh, opts);
  RateReplicate r;
  std::vector<double> sq(mesh.size());
  std::size_t total = 0;
  for (std::size_t q = 0; q < mesh.size(); ++q) {
    const FiniteSet1D truth = population_modes(design, mesh[q]);
    const FiniteSet1D est = modal.mode_set(q);
    const double e = hausdorff(est, truth);
    r.uniform = std::max(r.uniform, e);
    sq[q] = e * e;
    total += est.size();
    r.count_ok = r.count_ok && est.size() == truth.size();
  }
  r.mise = trapezoid(mesh, sq);
  r.modes = static_cast<double>(total) / static_cast<double>(mesh.size());
  r.center = hausdorff(mode_values(conditional_modes(model, center, opts)), population_modes(design, center));
  return r;
}

//! Empirical convergence rate of the mode-set error. Replicates run in
//! parallel; the report depends only on the seed.
inline RateReport
rate_study(const Design& design, const RateStudyConfig& cfg = {}, const ModeSearchOptions& opts = {})
{
  cfg.validate();
  const Interval dom = study_domain(design);
  const PointSet mesh = study_mesh(design, cfg.mesh_points, cfg.trim);
  const double center[1] = { dom.mid() };
  const double d = static_cast<double>(design_dim(design));

  RateReport out;
  for (std::size_t n : cfg.n_grid) {
    RatePoint pt;
    pt.n = n;
    pt.h = cfg.h_scale * std::pow(static_cast<double>(n), -1.0 / (d + 7.0));
    std::vector<RateReplicate> reps(cfg.reps);
    parallel_for(cfg.reps, [&](std::size_t r) {
      reps[r] = rate_replicate(design, n, pt.h, replicate_seed(cfg.seed, 0x72617465, n, r), mesh, center, opts);
    });
    std::size_t nc = 0, nu = 0;
    for (const auto& r : reps) {
      if (std::isfinite(r.center)) {
        pt.center_error += r.center;
        ++nc;
      }
      if (std::isfinite(r.uniform)) {
        pt.uniform_error += r.uniform;
        pt.mise += r.mise;
        ++nu;
      }
      pt.mean_modes += r.modes;
      pt.count_mismatch += !r.count_ok;
    }
    pt.center_mismatch = cfg.reps - nc;
    pt.uniform_mismatch = cfg.reps - nu;
    pt.center_error = nc ? pt.center_error / static_cast<double>(nc) : infinity;
    pt.uniform_error = nu ? pt.uniform_error / static_cast<double>(nu) : infinity;
    pt.mise = nu ? pt.mise / static_cast<double>(nu) : infinity;
    pt.mean_modes /= static_cast<double>(cfg.reps);
    out.points.push_back(pt);
  }

  std::vector<double> ln, lu, lc, lm;
  for (const auto& p : out.points) {
    ln.push_back(std::log(static_cast<double>(p.n)));
    lu.push_back(std::log(p.uniform_error));
    lc.push_back(std::log(p.center_error));
    lm.push_back(std::log(p.mise));
  }
  auto fit = [&](const std::vector<double>& y) {
    for (double v : y)
      if (!std::isfinite(v))
        return LineFit{ infinity, std::nan(""), std::nan(""), std::nan(""), cfg.level };
    return fit_line(ln, y, cfg.level);
  };
  out.uniform_fit = fit(lu);
  out.center_fit = fit(lc);
  out.mise_fit = fit(lm);
  out.decreasing = true;
  for (std::size_t k = 1; k < out.points.size(); ++k)
    out.decreasing = out.decreasing && out.points[k].uniform_error < out.points[k - 1].uniform_error;
  return out;
}

struct CoverageStudyConfig
{
  std::size_t n = 500;
  std::vector<double> alphas{ 0.1 };
  std::size_t B = 200;
  std::size_t reps = 200;
  std::uint64_t seed = 0;
  double h = 0.5;
  std::size_t mesh_points = 30;
  double trim = 0.05;

  void validate() const
  {
    if (n < 2 || B < 1 || reps < 1)
      throw InvalidArgument("coverage_study: need n >= 2, B >= 1 and reps >= 1");
    if (alphas.empty())
      throw InvalidArgument("coverage_study: at least one alpha is required");
    for (double a : alphas)
      if (!(a > 0.0 && a < 1.0))
        throw InvalidArgument("coverage_study: alpha must lie in (0, 1)");
    if (!(h > 0.0) || mesh_points < 1 || !(trim >= 0.0 && trim < 0.5))
      throw InvalidArgument("coverage_study: invalid h, mesh_points or trim");
  }
};

struct CoveragePoint
{
  double alpha = 0.0;
  double uniform_coverage = 0.0;   // all mesh points covered
  double pointwise_coverage = 0.0; // the centre covered by its own band
  double mean_uniform_delta = 0.0; // over replicates with a finite width
  double mean_pointwise_delta = 0.0;
  std::size_t uniform_unstable = 0; // infinite uniform width
  std::size_t pointwise_unstable = 0;
};

struct CoverageReport
{
  std::size_t n = 0, B = 0, reps = 0;
  double h = 0.0;
  double center = 0.0;
  std::vector<CoveragePoint> points; // one per alpha, in input order
};

//! Coverage of the smoothed mode function of a jointly Gaussian design by
//! bootstrap bands. Every alpha reuses the same replicates.
inline CoverageReport
coverage_study(const Design& design, const CoverageStudyConfig& cfg = {}, const ModeSearchOptions& opts = {})
{
  cfg.validate();
  const LinearModeFunction truth = smoothed_mode_oracle(design, cfg.h);
  const Interval dom = study_domain(design);
  const PointSet base = study_mesh(design, cfg.mesh_points, cfg.trim);

  // The mesh plus the centre; the uniform band only looks at the base mesh.
  std::vector<double> xs = base.coords();
  const double x0 = dom.mid();
  auto pos = std::lower_bound(xs.begin(), xs.end(), x0);
  const bool inserted = pos == xs.end() || *pos != x0;
  const std::size_t c = static_cast<std::size_t>(pos - xs.begin());
  if (inserted)
    xs.insert(pos, x0);
  const PointSet mesh = PointSet::from_scalars(xs);

  const std::size_t na = cfg.alphas.size();
  std::vector<std::vector<char>> ucov(cfg.reps, std::vector<char>(na)), pcov = ucov;
  std::vector<std::vector<double>> udel(cfg.reps, std::vector<double>(na)), pdel = udel;
  parallel_for(cfg.reps, [&](std::size_t r) {
    const std::uint64_t s = replicate_seed(cfg.seed, 0x636f7665, cfg.n, r);
    const KdeModel model(generate(design, cfg.n, s).data, cfg.h);
    const BootstrapConfig bc{ cfg.B, cfg.alphas.front(), mix64(s) };
    const BootstrapReplicates reps = bootstrap_replicates(model, mesh, bc, opts);
    std::vector<double> sup(cfg.B, 0.0);
    for (std::size_t b = 0; b < cfg.B; ++b)
      for (std::size_t q = 0; q < mesh.size(); ++q)
        if (q != c || !inserted)
          sup[b] = std::max(sup[b], reps.at(b, q));
    const std::vector<double> col = reps.column(c);
    for (std::size_t a = 0; a < na; ++a) {
      const double du = empirical_quantile(sup, cfg.alphas[a]);
      const double dp = empirical_quantile(col, cfg.alphas[a]);
      bool all = true;
      for (std::size_t q = 0; q < mesh.size(); ++q)
        if (q != c || !inserted)
          all = all && reps.estimate[q].distance(truth(mesh[q])) <= du;
      ucov[r][a] = all;
      pcov[r][a] = reps.estimate[c].distance(truth(mesh[c])) <= dp;
      udel[r][a] = du;
      pdel[r][a] = dp;
    }
  });

  CoverageReport out;
  out.n = cfg.n;
  out.B = cfg.B;
  out.reps = cfg.reps;
  out.h = cfg.h;
  out.center = x0;
  for (std::size_t a = 0; a < na; ++a) {
    CoveragePoint pt;
    pt.alpha = cfg.alphas[a];
    std::size_t fu = 0, fp = 0;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      pt.uniform_coverage += ucov[r][a];
      pt.pointwise_coverage += pcov[r][a];
      if (std::isfinite(udel[r][a])) {
        pt.mean_uniform_delta += udel[r][a];
        ++fu;
      }
      if (std::isfinite(pdel[r][a])) {
        pt.mean_pointwise_delta += pdel[r][a];
        ++fp;
      }
    }
    const double m = static_cast<double>(cfg.reps);
    pt.uniform_coverage /= m;
    pt.pointwise_coverage /= m;
    pt.uniform_unstable = cfg.reps - fu;
    pt.pointwise_unstable = cfg.reps - fp;
    pt.mean_uniform_delta = fu ? pt.mean_uniform_delta / static_cast<double>(fu) : infinity;
    pt.mean_pointwise_delta = fp ? pt.mean_pointwise_delta / static_cast<double>(fp) : infinity;
    out.points.push_back(pt);
  }
  return out;
}

} // namespace modalreg
