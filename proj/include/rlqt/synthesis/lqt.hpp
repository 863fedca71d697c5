#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "rlqt/linalg.hpp"
#include "rlqt/plant.hpp"

namespace rlqt {

/// Steady-state LQ tracking gain.
struct LqtDesign {
  Mat F;  // m x n, u = F x + u_r
  Mat P;  // n x n CARE solution
  Mat Q;  // p1 x p1 tracking weight
  Mat R;  // m x m input weight
};

/// Solves AᵀP + PA − P B2 R⁻¹ B2ᵀ P + EᵀQE = 0 and returns F = −R⁻¹B2ᵀP.
inline LqtDesign design_lqt(const LinearPlant& lp, const Mat& q, const Mat& r) {
  linalg::require_shape(q, lp.p1(), lp.p1(), "design_lqt: Q");
  linalg::require_shape(r, lp.m(), lp.m(), "design_lqt: R");
  LqtDesign d;
  d.Q = q;
  d.R = r;
  const Mat qx = linalg::symmetrize(lp.E.transpose() * q * lp.E);
  d.P = linalg::solve_care(lp.A, lp.B2, qx, r);
  d.F = -r.llt().solve(lp.B2.transpose() * d.P);
  if (!linalg::is_hurwitz(lp.A + lp.B2 * d.F)) {
    throw RiccatiError("design_lqt: A + B2 F is not Hurwitz");
  }
  return d;
}

/// Reference r(t) for the tracked output ỹ = E x.
using ReferenceFn = std::function<Vec(double)>;

/// Adjoint state b(t) of the tracking problem on the grid t_k = k h, k = 0..N,
/// and the feed-forward u_r = R⁻¹B2ᵀb.
///
/// Between grid points b is reconstructed by cubic Hermite interpolation with
/// slopes taken from the adjoint ODE, which keeps mid-step samples at the
/// fourth-order accuracy of the integrator.
struct FeedforwardProfile {
  double h = 0.0;
  Index steps = 0;  // N
  Mat b;            // n x (N+1)
  Mat bdot;         // n x (N+1)
  Mat ur;           // m x (N+1)
  Mat gain;         // R⁻¹B2ᵀ, m x n

  double horizon() const { return h * static_cast<double>(steps); }

  Vec b_at(double t) const {
    if (steps == 0) return b.col(0);
    double s = t / h;
    Index k = static_cast<Index>(std::floor(s));
    k = std::clamp<Index>(k, 0, steps - 1);
    s -= static_cast<double>(k);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * b.col(k) + h10 * h * bdot.col(k) + h01 * b.col(k + 1) +
           h11 * h * bdot.col(k + 1);
  }

  Vec ur_at(double t) const { return gain * b_at(t); }
};

/// Integrates −ḃ = (A + B2F)ᵀb + EᵀQ r, b(T) = 0 backward with classical RK4.
inline FeedforwardProfile solve_feedforward(const LqtDesign& lqt, const LinearPlant& lp,
                                            const ReferenceFn& r, double horizon, double h) {
  if (!(h > 0.0) || !(horizon > 0.0)) {
    throw DimensionError("solve_feedforward: horizon and step must be positive");
  }
  const double ratio = horizon / h;
  const Index n_steps = static_cast<Index>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(n_steps)) > 1e-9 * ratio) {
    throw DimensionError("solve_feedforward: horizon is not a multiple of the step");
  }
  const Index n = lp.n();
  const Mat acl_t = (lp.A + lp.B2 * lqt.F).transpose();
  const Mat eq = lp.E.transpose() * lqt.Q;

  // In reversed time τ = T − t: db/dτ = (A + B2F)ᵀ b + EᵀQ r(T − τ).
  auto rhs = [&](double t, const Vec& b) -> Vec {
    const Vec rt = r(t);
    if (rt.size() != lp.p1()) throw DimensionError("solve_feedforward: reference size");
    return acl_t * b + eq * rt;
  };

  FeedforwardProfile ff;
  ff.h = h;
  ff.steps = n_steps;
  ff.b = Mat::Zero(n, n_steps + 1);
  ff.bdot = Mat::Zero(n, n_steps + 1);
  ff.gain = lqt.R.llt().solve(lp.B2.transpose());

  Vec b = Vec::Zero(n);
  for (Index k = n_steps; k > 0; --k) {
    const double t = static_cast<double>(k) * h;
    const Vec k1 = rhs(t, b);
    const Vec k2 = rhs(t - 0.5 * h, b + 0.5 * h * k1);
    const Vec k3 = rhs(t - 0.5 * h, b + 0.5 * h * k2);
    const Vec k4 = rhs(t - h, b + h * k3);
    ff.bdot.col(k) = -k1;
    b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    ff.b.col(k - 1) = b;
  }
  ff.bdot.col(0) = -rhs(0.0, b);
  ff.ur = ff.gain * ff.b;
  return ff;
}

}  // namespace rlqt
