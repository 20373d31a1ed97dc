#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "density.hpp"
#include "modes.hpp"

namespace modalreg {

//! Hessian of the joint density at (x, y) with its closed-form 2x2
//! eigensystem, ordered (x, y).
struct HessianEval
{
  double p = 0.0;
  double grad[2] = { 0.0, 0.0 };
  double H[2][2] = { { 0.0, 0.0 }, { 0.0, 0.0 } };
  double lambda1 = 0.0; // lambda1 >= lambda2
  double lambda2 = 0.0;
  double v1[2] = { 1.0, 0.0 };
  double v2[2] = { 0.0, 1.0 };
  bool isotropic = false; // repeated eigenvalue: v1, v2 are arbitrary

  //! |H v2 - lambda2 v2|.
  double residual() const
  {
    const double r0 = H[0][0] * v2[0] + H[0][1] * v2[1] - lambda2 * v2[0];
    const double r1 = H[1][0] * v2[0] + H[1][1] * v2[1] - lambda2 * v2[1];
    return std::hypot(r0, r1);
  }
};

//! Relative eigen-gap below which a point is reported as isotropic.
inline constexpr double isotropic_gap = 1e-10;

namespace detail {
//! Unit eigenvector of the symmetric [[a, b], [b, c]] for eigenvalue lam,
//! from whichever of the two row-derived candidates is better conditioned.
//! Sign fixed so the y component is positive (x component if y is zero).
inline void
eigvec2(double a, double b, double c, double lam, double out[2])
{
  double u0 = b, u1 = lam - a;
  const double w0 = lam - c, w1 = b;
  if (std::hypot(w0, w1) > std::hypot(u0, u1)) {
    u0 = w0;
    u1 = w1;
  }
  const double nrm = std::hypot(u0, u1);
  if (!(nrm > 0.0)) {
    out[0] = a <= c ? 1.0 : 0.0;
    out[1] = a <= c ? 0.0 : 1.0;
    return;
  }
  u0 /= nrm;
  u1 /= nrm;
  if (u1 < 0.0 || (u1 == 0.0 && u0 < 0.0)) {
    u0 = -u0;
    u1 = -u1;
  }
  out[0] = u0;
  out[1] = u1;
}
} // namespace detail

inline HessianEval
hessian_eigen(const KdeModel& model, double x, double y)
{
  const JointHessian j = eval_hessian(model, x, y);
  HessianEval e;
  e.p = j.p;
  e.grad[0] = j.grad[0];
  e.grad[1] = j.grad[1];
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      e.H[r][c] = j.H[r][c];
  const double a = e.H[0][0], b = e.H[0][1], c = e.H[1][1];
  const double mid = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  e.lambda1 = mid + rad;
  e.lambda2 = mid - rad;
  const double scale = std::max(std::abs(e.lambda1), std::abs(e.lambda2));
  e.isotropic = !(e.lambda1 - e.lambda2 > isotropic_gap * scale);
  if (e.isotropic) {
    e.v1[0] = 1.0, e.v1[1] = 0.0;
    e.v2[0] = 0.0, e.v2[1] = 1.0;
    return e;
  }
  detail::eigvec2(a, b, c, e.lambda2, e.v2);
  // v1 is v2 rotated by a quarter turn.
  e.v1[0] = e.v2[1];
  e.v1[1] = -e.v2[0];
  return e;
}

struct RidgeReport
{
  HessianEval hess;
  double tol = 0.0;
  double projected_gradient = 0.0; // v2' grad p; the gradient norm at isotropic points
  double curvature = 0.0;          // v2' H v2 = lambda2
  bool gradient_ok = false;
  bool curvature_ok = false;
  bool member = false;
};

//! Default gradient tolerance: 1e-4 of the local gradient scale p / h.
inline double
default_ridge_tol(double p, double h, double rel = 1e-4)
{
  return rel * p / h;
}

//! Density-ridge membership of (x, y): |v2' grad p| <= tol and
//! v2' H v2 < 0. One covariate.
inline RidgeReport
ridge_test(const KdeModel& model, double x, double y, std::optional<double> tol = std::nullopt)
{
  RidgeReport r;
  r.hess = hessian_eigen(model, x, y);
  const HessianEval& e = r.hess;
  r.tol = tol ? *tol : default_ridge_tol(e.p, model.h());
  if (!(r.tol >= 0.0))
    throw InvalidArgument("ridge_test: tolerance must be nonnegative");
  r.projected_gradient = e.isotropic ? std::hypot(e.grad[0], e.grad[1]) : e.v2[0] * e.grad[0] + e.v2[1] * e.grad[1];
  r.curvature = e.lambda2;
  r.gradient_ok = std::abs(r.projected_gradient) <= r.tol;
  r.curvature_ok = e.lambda2 < 0.0;
  r.member = r.gradient_ok && r.curvature_ok;
  return r;
}

//! One mode point of a ridge scan.
struct RidgeScanEntry
{
  std::size_t query = 0;
  double x = 0.0;
  double y = 0.0;
  double p_x = 0.0;
  double p_xy = 0.0;
  RidgeReport ridge;
  bool stationary = false; // |p_x| <= rel_tol p / h
  bool cross_free = false; // |p_xy| <= rel_tol p / h^2
  bool violation = false;  // a premise holds but the point is not a ridge member
};

struct RidgeScanReport
{
  std::vector<RidgeScanEntry> entries;
  std::size_t mode_points = 0;
  std::size_t members = 0;
  std::size_t stationary = 0;
  std::size_t cross_free = 0;
  std::size_t premised = 0; // either premise holds
  std::size_t violations = 0;
  std::size_t negative_lambda2 = 0;
  double worst_violation = 0.0; // max |v2' grad p| / tol over violations
  double max_residual = 0.0;    // max |H v2 - lambda2 v2|

  bool all_members() const { return members == mode_points; }
};

//! Evaluates every mode point of `modal` against the two sufficient
//! conditions for a conditional mode to lie on the density ridge (p_x = 0 or
//! p_xy = 0) and records each case where a condition holds but membership
//! fails. Nothing is thrown for violations; they are counted.
//!
//! p_xy = 0 puts the eigenvectors on the axes, and then v2 is the y axis only
//! if H_yy <= H_xx. When H_xx < H_yy the point is a conditional mode that is
//! not on the ridge even though p_xy = 0, so violations are possible.
inline RidgeScanReport
ridge_scan(const KdeModel& model, const ModalSet& modal, double rel_tol = 1e-4)
{
  if (model.dim() != 1 || modal.queries.dim() != 1)
    throw InvalidArgument("ridge_scan requires d = 1");
  if (!(rel_tol >= 0.0))
    throw InvalidArgument("ridge_scan: tolerance must be nonnegative");
  const double h = model.h();
  RidgeScanReport out;
  for (std::size_t q = 0; q < modal.size(); ++q)
    for (const ModePoint& m : modal.modes[q]) {
      RidgeScanEntry e;
      e.query = q;
      e.x = modal.queries[q][0];
      e.y = m.y;
      e.ridge = ridge_test(model, e.x, e.y, std::nullopt);
      e.ridge.tol = default_ridge_tol(e.ridge.hess.p, h, rel_tol);
      e.ridge.gradient_ok = std::abs(e.ridge.projected_gradient) <= e.ridge.tol;
      e.ridge.member = e.ridge.gradient_ok && e.ridge.curvature_ok;
      e.p_x = e.ridge.hess.grad[0];
      e.p_xy = e.ridge.hess.H[0][1];
      const double p = e.ridge.hess.p;
      e.stationary = std::abs(e.p_x) <= rel_tol * p / h;
      e.cross_free = std::abs(e.p_xy) <= rel_tol * p / (h * h);
      e.violation = (e.stationary || e.cross_free) && !e.ridge.member;

      ++out.mode_points;
      out.members += e.ridge.member;
      out.stationary += e.stationary;
      out.cross_free += e.cross_free;
      out.premised += e.stationary || e.cross_free;
      out.negative_lambda2 += e.ridge.hess.lambda2 < 0.0;
      out.max_residual = std::max(out.max_residual, e.ridge.hess.residual());
      if (e.violation) {
        ++out.violations;
        const double ratio = e.ridge.tol > 0.0 ? std::abs(e.ridge.projected_gradient) / e.ridge.tol : infinity;
        out.worst_violation = std::max(out.worst_violation, ratio);
      }
      out.entries.push_back(std::move(e));
    }
  return out;
}

} // namespace modalreg
