#include <gtest/gtest.h>

#include <cmath>

#include <modalreg/inference.hpp>
#include <modalreg/synthdata.hpp>

using namespace modalreg;

namespace {

//! Smallest sample value d with #{v > d} <= alpha * m, by enumeration.
double
counting_quantile(const std::vector<double>& v, double alpha)
{
  double best = infinity;
  for (double d : v) {
    std::size_t above = 0;
    for (double w : v)
      above += w > d;
    if (above <= alpha * v.size() + 1e-9)
      best = std::min(best, d);
  }
  return best;
}

const GaussianJointSpec linear_design{ { 0.0, 0.0 }, { 1.0, 0.5, 0.5, 1.0 } };

PointSet
interior_mesh(std::size_t m)
{
  const Interval b[] = { { -1.5, 1.5 } };
  return make_mesh(b, m);
}

} // namespace

TEST(Quantile, FourReplicates)
{
  // The counting rule (1/B) #{D_j > d} <= alpha first holds at the third
  // order statistic.
  EXPECT_DOUBLE_EQ(empirical_quantile({ 0.4, 0.1, 0.3, 0.2 }, 0.25), 0.3);
  EXPECT_DOUBLE_EQ(counting_quantile({ 0.4, 0.1, 0.3, 0.2 }, 0.25), 0.3);
}

TEST(Quantile, MatchesCountingRule)
{
  Rng rng(4);
  std::uniform_int_distribution<int> size(1, 60), value(0, 20);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(size(rng));
    for (double& x : v)
      x = value(rng) == 20 ? infinity : value(rng) * 0.1;
    for (double a : { 0.01, 0.05, 0.1, 0.25, 0.5, 0.9 })
      EXPECT_EQ(empirical_quantile(v, a), counting_quantile(v, a));
  }
}

TEST(Quantile, InfiniteValuesSortLast)
{
  EXPECT_DOUBLE_EQ(empirical_quantile({ infinity, 1, 2, 3 }, 0.25), 3.0);
  EXPECT_TRUE(std::isinf(empirical_quantile({ infinity, infinity, 1, 2 }, 0.25)));
  EXPECT_THROW(empirical_quantile({}, 0.1), InvalidArgument);
  EXPECT_THROW(empirical_quantile({ 1.0 }, 1.0), InvalidArgument);
}

TEST(Bootstrap, IdenticalDataHasZeroWidth)
{
  KdeModel model(DataSet::from_pairs(std::vector<double>(30, 0.5), std::vector<double>(30, 1.0)), 0.3);
  const double x[] = { 0.5 };
  BootstrapConfig cfg{ 20, 0.1, 3 };
  auto p = bootstrap_pointwise(model, x, cfg);
  EXPECT_EQ(p.delta, std::vector<double>{ 0.0 });
  PointSet mesh = PointSet::from_scalars({ 0.4, 0.5, 0.6 });
  auto u = bootstrap_uniform(model, mesh, cfg);
  EXPECT_EQ(u.delta, std::vector<double>{ 0.0 });
}

TEST(Bootstrap, InvalidConfig)
{
  KdeModel model(generate(linear_design, 50, 1).data, 0.5);
  const double x[] = { 0.0 };
  EXPECT_THROW(bootstrap_pointwise(model, x, { 0, 0.1, 1 }), InvalidArgument);
  EXPECT_THROW(bootstrap_pointwise(model, x, { 10, 0.0, 1 }), InvalidArgument);
  const double far[] = { 60.0 };
  EXPECT_THROW(bootstrap_pointwise(model, far, { 10, 0.1, 1 }), NoModeError);
}

TEST(Bootstrap, UniformDominatesPointwiseAndShrinksWithAlpha)
{
  KdeModel model(generate(linear_design, 200, 8).data, 0.5);
  auto reps = bootstrap_replicates(model, interior_mesh(12), { 60, 0.1, 9 });
  double last_uniform = infinity;
  std::vector<double> last_pointwise(12, infinity);
  for (double a : { 0.02, 0.05, 0.1, 0.2, 0.5 }) {
    auto p = pointwise_band(reps, a);
    auto u = uniform_band(reps, a);
    for (std::size_t q = 0; q < 12; ++q) {
      EXPECT_GE(u.delta[0], p.delta[q]);
      EXPECT_LE(p.delta[q], last_pointwise[q]);
      last_pointwise[q] = p.delta[q];
    }
    EXPECT_LE(u.delta[0], last_uniform);
    last_uniform = u.delta[0];
  }
  EXPECT_GT(last_uniform, 0.0);
}

TEST(Bootstrap, ReproducibleAcrossRunsAndThreads)
{
  KdeModel model(generate(linear_design, 150, 2).data, 0.5);
  const PointSet mesh = interior_mesh(8);
  const BootstrapConfig cfg{ 40, 0.1, 77 };
  set_num_threads(1);
  auto a = bootstrap_replicates(model, mesh, cfg);
  auto b = bootstrap_replicates(model, mesh, cfg);
  set_num_threads(4);
  auto c = bootstrap_replicates(model, mesh, cfg);
  set_num_threads(1);
  EXPECT_EQ(a.distance, b.distance);
  EXPECT_EQ(a.distance, c.distance);
  auto d = bootstrap_replicates(model, mesh, { 40, 0.1, 78 });
  EXPECT_NE(a.distance, d.distance);
}

TEST(Bootstrap, ResampleUsesOriginalRows)
{
  auto rows = bootstrap_rows(10, 5, 3);
  EXPECT_EQ(rows.size(), 10u);
  for (auto r : rows)
    EXPECT_LT(r, 10u);
  EXPECT_EQ(rows, bootstrap_rows(10, 5, 3));
  EXPECT_NE(rows, bootstrap_rows(10, 5, 4));
}

TEST(Bootstrap, PointwiseCoverageOfSmoothedMode)
{
  // Gaussian (X, Y), n = 300, alpha = 0.1, B = 200: the band at x = 0 should
  // cover the mode of the kernel-smoothed density in about 90% of datasets.
  const double h = 0.5;
  const auto smoothed = smoothed_mode_oracle(linear_design, h);
  const double x[] = { 0.0 };
  const int reps = 200;
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    KdeModel model(generate(linear_design, 300, 1000 + r).data, h);
    auto band = bootstrap_pointwise(model, x, { 200, 0.1, static_cast<std::uint64_t>(r) });
    covered += band.covers(0, smoothed(x));
  }
  const double rate = covered / double(reps);
  EXPECT_GE(rate, 0.85);
  EXPECT_LE(rate, 0.95);
}
