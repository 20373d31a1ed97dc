#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "modalreg/density.hpp"

using namespace modalreg;

namespace {

DataSet
gaussian_cloud(std::size_t n, std::size_t d, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> xs(n * d), ys(n);
  for (auto& v : xs)
    v = z(rng);
  for (auto& v : ys)
    v = z(rng);
  return DataSet(PointSet(d, xs), ys);
}

// Independent direct sum written straight from the product-kernel formula.
double
direct_joint(const DataSet& data, double h, std::span<const double> x, double y)
{
  const double pi = std::numbers::pi;
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      r2 += std::pow((x[k] - data.x(i)[k]) / h, 2);
    const double kx = std::exp(-r2 / 2) / std::sqrt(2 * pi);
    const double ky = std::exp(-std::pow((y - data.y(i)) / h, 2) / 2) / std::sqrt(2 * pi);
    s += kx * ky;
  }
  return s / (data.size() * std::pow(h, x.size() + 1));
}

double
direct_marginal(const DataSet& data, double h, std::span<const double> x)
{
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      r2 += std::pow((x[k] - data.x(i)[k]) / h, 2);
    s += std::exp(-r2 / 2) / std::sqrt(2 * std::numbers::pi);
  }
  return s / (data.size() * std::pow(h, x.size()));
}

} // namespace

TEST(EvalJoint, SinglePointAtCenter)
{
  KdeModel model(DataSet::from_pairs({ 0.0 }, { 0.0 }), 1.0);
  const double x[] = { 0.0 };
  EXPECT_NEAR(eval_joint(model, x, 0.0).p, 1.0 / (2.0 * std::numbers::pi), 1e-15);
}

TEST(EvalJoint, TailDecaysAbovePoint)
{
  KdeModel model(DataSet::from_pairs({ 0.0 }, { 0.0 }), 1.0);
  const double x[] = { 0.0 };
  DensityEval e = eval_joint(model, x, 10.0);
  EXPECT_LT(e.p, 1e-20);
  EXPECT_LT(e.p_y, 0.0);
}

TEST(EvalJoint, MatchesDirectSumOnGrid)
{
  DataSet data = gaussian_cloud(50, 1, 11);
  KdeModel model(data, 0.4);
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) {
      const double x[] = { -2.0 + 0.4 * a };
      const double y = -2.0 + 0.4 * b;
      const double expect = direct_joint(data, 0.4, x, y);
      EXPECT_NEAR(eval_joint(model, x, y).p, expect, 1e-12 * expect);
    }
  }
}

TEST(EvalJoint, RejectsNonFinite)
{
  KdeModel model(DataSet::from_pairs({ 0.0 }, { 0.0 }), 1.0);
  const double x[] = { NAN };
  const double ok[] = { 0.0 };
  EXPECT_THROW(eval_joint(model, x, 0.0), InvalidArgument);
  EXPECT_THROW(eval_joint(model, ok, INFINITY), InvalidArgument);
}

TEST(EvalJoint, DerivativesMatchFiniteDifferences)
{
  DataSet data = gaussian_cloud(40, 2, 5);
  KdeModel model(data, 0.5);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const double step = 1e-5;
  auto close = [](double fd, double an, double scale) {
    return std::abs(fd - an) <= 1e-4 * std::max(std::abs(an), scale);
  };
  for (int t = 0; t < 100; ++t) {
    const double x[] = { u(rng), u(rng) };
    const double y = u(rng);
    DensityEval e = eval_joint(model, x, y);
    const double h = model.h();
    const double s1 = 1e-2 * e.p / h;
    const double s2 = 1e-2 * e.p / (h * h);

    DensityEval yp = eval_joint(model, x, y + step), ym = eval_joint(model, x, y - step);
    EXPECT_TRUE(close((yp.p - ym.p) / (2 * step), e.p_y, s1));
    EXPECT_TRUE(close((yp.p_y - ym.p_y) / (2 * step), e.p_yy, s2));
    for (std::size_t k = 0; k < 2; ++k) {
      double xp[] = { x[0], x[1] }, xm[] = { x[0], x[1] };
      xp[k] += step;
      xm[k] -= step;
      DensityEval a = eval_joint(model, xp, y), b = eval_joint(model, xm, y);
      EXPECT_TRUE(close((a.p - b.p) / (2 * step), e.p_x[k], s1));
      EXPECT_TRUE(close((a.p_y - b.p_y) / (2 * step), e.p_yx[k], s2));
    }
  }
}

TEST(EvalJoint, HessianMatchesFiniteDifferences)
{
  DataSet data = gaussian_cloud(30, 1, 8);
  KdeModel model(data, 0.6);
  const double step = 1e-5;
  for (double xv : { -1.0, 0.0, 0.7 }) {
    for (double y : { -0.5, 0.3, 1.2 }) {
      JointHessian hs = eval_hessian(model, xv, y);
      JointHessian a = eval_hessian(model, xv + step, y), b = eval_hessian(model, xv - step, y);
      const double scale = 1e-2 * hs.p / 0.36;
      EXPECT_NEAR((a.grad[0] - b.grad[0]) / (2 * step), hs.H[0][0], 1e-4 * std::max(std::abs(hs.H[0][0]), scale));
      EXPECT_NEAR((a.grad[1] - b.grad[1]) / (2 * step), hs.H[0][1], 1e-4 * std::max(std::abs(hs.H[0][1]), scale));
      const double xq[] = { xv };
      DensityEval e = eval_joint(model, xq, y);
      EXPECT_NEAR(hs.p, e.p, 1e-14);
      EXPECT_NEAR(hs.H[1][1], e.p_yy, 1e-12);
      EXPECT_EQ(hs.H[0][1], hs.H[1][0]);
    }
  }
}

TEST(EvalJoint, PermutationInvariant)
{
  DataSet data = gaussian_cloud(25, 2, 3);
  std::vector<std::size_t> rows(25);
  std::iota(rows.begin(), rows.end(), std::size_t{ 0 });
  std::shuffle(rows.begin(), rows.end(), std::mt19937_64(1));
  KdeModel a(data, 0.7), b(data.subset(rows), 0.7);
  const double x[] = { 0.2, -0.4 };
  DensityEval ea = eval_joint(a, x, 0.1), eb = eval_joint(b, x, 0.1);
  EXPECT_NEAR(ea.p, eb.p, 1e-15);
  EXPECT_NEAR(ea.p_y, eb.p_y, 1e-15);
  EXPECT_NEAR(ea.p_yy, eb.p_yy, 1e-14);
}

TEST(EvalJoint, ScalingHomogeneity)
{
  DataSet data = gaussian_cloud(30, 1, 21);
  const double c = 2.5;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < data.size(); ++i) {
    xs.push_back(c * data.x(i)[0]);
    ys.push_back(c * data.y(i));
  }
  KdeModel a(data, 0.5), b(DataSet::from_pairs(xs, ys), 0.5 * c);
  for (double y : { -1.0, -0.2, 0.0, 0.4, 1.3 }) {
    const double xa[] = { 0.3 }, xb[] = { 0.3 * c };
    DensityEval ea = eval_joint(a, xa, y), eb = eval_joint(b, xb, c * y);
    EXPECT_NEAR(eb.p, ea.p / (c * c), 1e-12 * ea.p);
    EXPECT_EQ(std::signbit(ea.p_y), std::signbit(eb.p_y));
    EXPECT_EQ(std::signbit(ea.p_yy), std::signbit(eb.p_yy));
  }
}

TEST(EvalConditional, SinglePointIsYKernel)
{
  KdeModel model(DataSet::from_pairs({ 0.0 }, { 0.0 }), 1.0);
  const double x[] = { 0.0 };
  EXPECT_NEAR(eval_conditional(model, x, 0.0), 0.3989422804014327, 1e-15);
}

TEST(EvalConditional, IntegratesToOne)
{
  DataSet data = gaussian_cloud(60, 1, 4);
  const double h = 0.3;
  KdeModel model(data, h);
  const Interval range = data.y_bounds().expanded(5 * h);
  for (double xv : { -1.0, 0.0, 0.8 }) {
    const double x[] = { xv };
    // Composite Simpson with a step well below h.
    const int m = 4000;
    const double dy = range.length() / m;
    double s = eval_conditional(model, x, range.lo) + eval_conditional(model, x, range.hi);
    for (int k = 1; k < m; ++k)
      s += (k % 2 ? 4.0 : 2.0) * eval_conditional(model, x, range.lo + k * dy);
    EXPECT_NEAR(s * dy / 3.0, 1.0, 1e-6);
  }
}

TEST(EvalConditional, TwoPointsMatchDirectRatio)
{
  DataSet data = DataSet::from_pairs({ -1.0, 1.0 }, { 0.5, 2.0 });
  KdeModel model(data, 0.8);
  const double x[] = { 0.1 };
  for (double y : { 0.0, 0.9, 1.6 }) {
    const double expect = direct_joint(data, 0.8, x, y) / direct_marginal(data, 0.8, x);
    EXPECT_NEAR(eval_conditional(model, x, y), expect, 1e-12 * expect);
  }
}

TEST(EvalConditional, LowDensityRegion)
{
  KdeModel model(DataSet::from_pairs({ 0.0, 0.1 }, { 0.0, 1.0 }), 0.1);
  const double far[] = { 50.0 };
  EXPECT_THROW(eval_conditional(model, far, 0.0), LowDensityError);
}

TEST(ModalGradient, ZeroForMirroredData)
{
  DataSet base = gaussian_cloud(30, 1, 2);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < base.size(); ++i) {
    xs.push_back(base.x(i)[0]);
    ys.push_back(base.y(i));
    xs.push_back(base.x(i)[0]);
    ys.push_back(-base.y(i));
  }
  KdeModel model(DataSet::from_pairs(xs, ys), 1.0);
  for (double xv : { -0.5, 0.0, 0.6 }) {
    const double x[] = { xv };
    // Wide bandwidth: y = 0 is the (single) mode by symmetry.
    ASSERT_LT(eval_joint(model, x, 0.0).p_yy, 0.0);
    EXPECT_NEAR(modal_gradient(model, x, 0.0)[0], 0.0, 1e-12);
  }
}

TEST(ModalGradient, DegenerateCurvature)
{
  // Midway between two points 2h apart, p_yy vanishes exactly.
  KdeModel model(DataSet::from_pairs({ 0.0, 0.0 }, { -1.0, 1.0 }), 1.0);
  const double x[] = { 0.0 };
  EXPECT_THROW(modal_gradient(model, x, 0.0), DegenerateCurvatureError);
}
