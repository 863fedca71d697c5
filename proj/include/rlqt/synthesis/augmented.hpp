#pragma once

#include "rlqt/linalg.hpp"
#include "rlqt/plant.hpp"
#include "rlqt/synthesis/lqt.hpp"
#include "rlqt/synthesis/observer.hpp"

namespace rlqt {

/// Standard generalized plant
///   ẋ = A x + B1 w + B2 u,   z = C1 x + D11 w + D12 u,   y = C2 x + D21 w + D22 u.
struct GeneralizedPlant {
  Mat A, B1, B2, C1, D11, D12, C2, D21, D22;

  Index n() const { return A.rows(); }
  Index nw() const { return B1.cols(); }
  Index nu() const { return B2.cols(); }
  Index nz() const { return C1.rows(); }
  Index ny() const { return C2.rows(); }

  void validate() const {
    using linalg::require_shape;
    linalg::require_square(A, "GeneralizedPlant.A");
    const Index nn = n();
    require_shape(B1, nn, B1.cols(), "GeneralizedPlant.B1");
    require_shape(B2, nn, B2.cols(), "GeneralizedPlant.B2");
    require_shape(C1, C1.rows(), nn, "GeneralizedPlant.C1");
    require_shape(C2, C2.rows(), nn, "GeneralizedPlant.C2");
    require_shape(D11, nz(), nw(), "GeneralizedPlant.D11");
    require_shape(D12, nz(), nu(), "GeneralizedPlant.D12");
    require_shape(D21, ny(), nw(), "GeneralizedPlant.D21");
    require_shape(D22, ny(), nu(), "GeneralizedPlant.D22");
  }
};

/// Plant seen by the filter Q̃: state (x, e) with e = x − x̂, disturbance w,
/// control u_f, measured residual f = ŷ − y and performance output z.
///
///   ẋ = (A + B2F) x − B2F e + B2 u_f + B1 w
///   ė = (A + LC2) e + (B1 + LD21) w
///   z = (C1 + D12F) x − D12F e + D12 u_f
///   f = −C2 e − D21 w
///
/// `lp` must carry its performance output (C1, D12); see with_performance_weights.
inline GeneralizedPlant build_augmented_plant(const LinearPlant& lp, const LqtDesign& lqt,
                                              const ObserverDesign& obs) {
  lp.validate();
  if (!lp.has_performance_output()) {
    throw DimensionError("build_augmented_plant: plant has no performance output C1/D12");
  }
  const Index n = lp.n(), m = lp.m(), p = lp.p(), nw = lp.nw(), pz = lp.pz();
  linalg::require_shape(lqt.F, m, n, "build_augmented_plant: F");
  linalg::require_shape(obs.L, n, p, "build_augmented_plant: L");

  GeneralizedPlant g;
  const Mat bf = lp.B2 * lqt.F;
  g.A = Mat::Zero(2 * n, 2 * n);
  g.A.topLeftCorner(n, n) = lp.A + bf;
  g.A.topRightCorner(n, n) = -bf;
  g.A.bottomRightCorner(n, n) = lp.A + obs.L * lp.C2;

  g.B1.resize(2 * n, nw);
  g.B1 << lp.B1, lp.B1 + obs.L * lp.D21;
  g.B2 = Mat::Zero(2 * n, m);
  g.B2.topRows(n) = lp.B2;

  const Mat df = lp.D12 * lqt.F;
  g.C1.resize(pz, 2 * n);
  g.C1 << lp.C1 + df, -df;
  g.D11 = Mat::Zero(pz, nw);
  g.D12 = lp.D12;

  g.C2 = Mat::Zero(p, 2 * n);
  g.C2.rightCols(n) = -lp.C2;
  g.D21 = -lp.D21;
  g.D22 = Mat::Zero(p, m);
  return g;
}

}  // namespace rlqt
