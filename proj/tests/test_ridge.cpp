#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <modalreg/ridge.hpp>
#include <modalreg/synthdata.hpp>

using namespace modalreg;

namespace {

// Jacobi rotation of [[a, b], [b, c]]: eigenvectors (cos t, sin t) and
// (-sin t, cos t) with t = atan2(2b, a - c) / 2.
struct Eig
{
  double lo, hi, vlo[2];
};

Eig
jacobi(double a, double b, double c)
{
  const double t = 0.5 * std::atan2(2.0 * b, a - c);
  const double cs = std::cos(t), sn = std::sin(t);
  const double e1 = a * cs * cs + 2.0 * b * cs * sn + c * sn * sn;
  const double e2 = a * sn * sn - 2.0 * b * cs * sn + c * cs * cs;
  Eig out;
  if (e1 <= e2) {
    out = { e1, e2, { cs, sn } };
  } else {
    out = { e2, e1, { -sn, cs } };
  }
  return out;
}

ModalSet
modal_at(const KdeModel& model, std::vector<double> xs)
{
  return build_modal_set(model, PointSet::from_scalars(std::move(xs)));
}

} // namespace

TEST(Ridge, SinglePointPeakIsIsotropicMember)
{
  KdeModel model(DataSet::from_pairs({ 0.0 }, { 0.0 }), 1.0);
  auto r = ridge_test(model, 0.0, 0.0);
  EXPECT_TRUE(r.hess.isotropic);
  EXPECT_TRUE(r.member);
  EXPECT_EQ(r.projected_gradient, 0.0);
  auto scan = ridge_scan(model, modal_at(model, { 0.0 }));
  ASSERT_EQ(scan.mode_points, 1u);
  EXPECT_EQ(scan.stationary, 1u);
  EXPECT_EQ(scan.members, 1u);
}

TEST(Ridge, SinglePointOffAxisIsMember)
{
  // p = phi(x) phi(y): p_xy = 0 and H_yy = -p < H_xx = -0.75 p at x = 0.5.
  KdeModel model(DataSet::from_pairs({ 0.0 }, { 0.0 }), 1.0);
  auto r = ridge_test(model, 0.5, 0.0);
  EXPECT_FALSE(r.hess.isotropic);
  EXPECT_EQ(r.hess.H[0][1], 0.0);
  EXPECT_NEAR(r.hess.lambda2, -r.hess.p, 1e-15);
  EXPECT_NEAR(r.hess.lambda1, -0.75 * r.hess.p, 1e-15);
  EXPECT_TRUE(r.member);
  auto scan = ridge_scan(model, modal_at(model, { 0.5 }));
  EXPECT_EQ(scan.cross_free, 1u);
  EXPECT_EQ(scan.stationary, 0u);
  EXPECT_EQ(scan.violations, 0u);
}

TEST(Ridge, CrossFreeModeOffTheRidge)
{
  // p = phi(x) (phi(y - 0.5) + phi(y + 0.5)) / 2 at (0.3, 0): y = 0 is the
  // only conditional mode and p_xy = 0, but H_xx = -0.91 p lies below
  // H_yy = -0.75 p, so v2 is the x axis and v2' grad p = p_x != 0.
  KdeModel model(DataSet::from_pairs({ 0.0, 0.0 }, { -0.5, 0.5 }), 1.0);
  auto modal = modal_at(model, { 0.3 });
  ASSERT_EQ(modal.modes[0].size(), 1u);
  EXPECT_NEAR(modal.modes[0][0].y, 0.0, 1e-7);
  auto r = ridge_test(model, 0.3, 0.0);
  EXPECT_NEAR(r.hess.v2[0], 1.0, 1e-12);
  EXPECT_NEAR(r.hess.lambda2 / r.hess.p, 0.09 - 1.0, 1e-12);
  EXPECT_NEAR(r.hess.lambda1 / r.hess.p, 0.25 - 1.0, 1e-12);
  EXPECT_FALSE(r.member);
  auto scan = ridge_scan(model, modal);
  EXPECT_EQ(scan.cross_free, 1u);
  EXPECT_EQ(scan.violations, 1u);
  EXPECT_GT(scan.worst_violation, 1000.0);
}

TEST(Ridge, CorrelatedDesignDiffers)
{
  GaussianJointSpec g{ { 0.0, 0.0 }, { 1.0, 0.8, 0.8, 1.0 } };
  auto data = generate(g, 400, 21).data;
  KdeModel model(data, 0.4);
  auto modal = modal_at(model, { 1.0 });
  ASSERT_EQ(modal.modes[0].size(), 1u);
  const double y = modal.modes[0][0].y;
  auto r = ridge_test(model, 1.0, y);
  const JointHessian j = eval_hessian(model, 1.0, y);
  const Eig o = jacobi(j.H[0][0], j.H[0][1], j.H[1][1]);
  EXPECT_NEAR(r.hess.lambda2, o.lo, 1e-12 * std::abs(o.lo));
  EXPECT_NEAR(r.hess.lambda1, o.hi, 1e-12 * std::abs(o.lo));
  const double proj = o.vlo[0] * j.grad[0] + o.vlo[1] * j.grad[1];
  EXPECT_NEAR(std::abs(r.projected_gradient), std::abs(proj), 1e-10 * std::abs(proj));
  EXPECT_GT(std::abs(j.grad[0]), 1e-2 * j.p);
  EXPECT_GT(std::abs(j.H[0][1]), 1e-2 * j.p);
  EXPECT_GT(std::abs(proj), 10.0 * r.tol);
  EXPECT_FALSE(r.member);
  EXPECT_TRUE(r.curvature_ok);
}

TEST(Ridge, EigensystemMatchesOracle)
{
  GaussianJointSpec g{ { 0.0, 1.0 }, { 1.0, -0.3, -0.3, 2.0 } };
  auto data = generate(g, 150, 2).data;
  KdeModel model(data, 0.5);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(-2.5, 2.5), uy(-2.0, 4.0);
  for (int t = 0; t < 300; ++t) {
    const double x = ux(rng), y = uy(rng);
    auto e = hessian_eigen(model, x, y);
    const Eig o = jacobi(e.H[0][0], e.H[0][1], e.H[1][1]);
    const double scale = std::max(std::abs(o.lo), std::abs(o.hi));
    EXPECT_GE(e.lambda1, e.lambda2);
    EXPECT_NEAR(e.lambda2, o.lo, 1e-12 * scale);
    EXPECT_NEAR(e.lambda1, o.hi, 1e-12 * scale);
    EXPECT_NEAR(std::hypot(e.v2[0], e.v2[1]), 1.0, 1e-14);
    EXPECT_NEAR(e.v1[0] * e.v2[0] + e.v1[1] * e.v2[1], 0.0, 1e-14);
    EXPECT_NEAR(std::abs(e.v2[0] * o.vlo[0] + e.v2[1] * o.vlo[1]), 1.0, 1e-9);
    EXPECT_LE(e.residual(), 1e-9);
    EXPECT_EQ(e.H[0][1], e.H[1][0]);
  }
}

TEST(Ridge, SeparableDensityAllMembers)
{
  // Product grid: 41 equally spaced x times two tight response clusters, so
  // p = f(x) g(y) with f nearly flat and g sharply peaked.
  std::vector<double> xs, ys;
  for (int i = 0; i <= 40; ++i)
    for (double y : { -1.1, -1.0, -0.9, 0.9, 1.0, 1.1 }) {
      xs.push_back(0.1 * i);
      ys.push_back(y);
    }
  KdeModel model(DataSet::from_pairs(xs, ys), 0.3);
  Interval b[] = { { 0.0, 4.0 } };
  auto modal = build_modal_set(model, make_mesh(b, 60, 0.05));
  auto scan = ridge_scan(model, modal);
  ASSERT_EQ(scan.mode_points, 120u);
  EXPECT_EQ(scan.cross_free, scan.mode_points);
  EXPECT_TRUE(scan.all_members());
  EXPECT_EQ(scan.violations, 0u);
  EXPECT_EQ(scan.negative_lambda2, scan.mode_points);
  EXPECT_LE(scan.max_residual, 1e-9);
}

TEST(Ridge, LambdaTwoNegativeAtModes)
{
  GmSpec s;
  s.x = { { XDistribution::Kind::uniform, 0.0, 2.0 } };
  Component a, b;
  a.weight = b.weight = 0.5;
  a.sd = b.sd = 0.3;
  a.mean.linear = { 0.5 };
  b.mean.offset = 2.0;
  b.mean.sin_amplitude = 0.5;
  b.mean.sin_frequency = 3.0;
  s.components = { a, b };
  auto data = generate(s, 500, 8).data;
  KdeModel model(data, 0.2);
  Interval bb[] = { { 0.0, 2.0 } };
  auto scan = ridge_scan(model, build_modal_set(model, make_mesh(bb, 40, 0.05)));
  ASSERT_GT(scan.mode_points, 0u);
  EXPECT_EQ(scan.negative_lambda2, scan.mode_points);
  EXPECT_LE(scan.max_residual, 1e-9);
  for (const auto& e : scan.entries)
    if (e.violation)
      EXPECT_TRUE(e.cross_free && !e.stationary);
}

TEST(Ridge, JointPeaksAreOnTheRidge)
{
  // Two blobs; the conditional mode at the x of a joint mode is that mode,
  // where p_x = 0.
  GaussianJointSpec blob{ { 0.0, 0.0 }, { 0.09, 0.05, 0.05, 0.09 } };
  auto d1 = generate(blob, 200, 5).data;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    xs.push_back(d1.x(i)[0]);
    ys.push_back(d1.y(i));
    xs.push_back(d1.x(i)[0] + 2.0);
    ys.push_back(d1.y(i) + 1.5);
  }
  KdeModel model(DataSet::from_pairs(xs, ys), 0.25);
  for (double cx : { 0.0, 2.0 }) {
    // Joint mean shift from the blob centre.
    double x = cx, y = cx * 0.75;
    for (int it = 0; it < 5000; ++it) {
      double sw = 0.0, sx = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double w = std::exp(-0.5 * ((x - xs[i]) * (x - xs[i]) + (y - ys[i]) * (y - ys[i])) / 0.0625);
        sw += w;
        sx += w * xs[i];
        sy += w * ys[i];
      }
      x = sx / sw;
      y = sy / sw;
    }
    auto modal = modal_at(model, { x });
    auto scan = ridge_scan(model, modal);
    bool found = false;
    for (const auto& e : scan.entries)
      if (std::abs(e.y - y) < 1e-5) {
        found = true;
        EXPECT_TRUE(e.stationary);
        EXPECT_TRUE(e.ridge.member);
      }
    EXPECT_TRUE(found);
  }
}

TEST(Ridge, RejectsTwoCovariates)
{
  GaussianJointSpec g{ { 0, 0, 0 }, { 1, 0, 0, 0, 1, 0, 0, 0, 1 } };
  KdeModel model(generate(g, 20, 1).data, 0.5);
  EXPECT_THROW(ridge_test(model, 0.0, 0.0), InvalidArgument);
}
