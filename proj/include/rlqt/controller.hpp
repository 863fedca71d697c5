#pragma once

#include <string>
#include <vector>

#include "rlqt/linalg.hpp"
#include "rlqt/plant.hpp"
#include "rlqt/synthesis.hpp"

namespace rlqt {

/// Q̃_α: the H∞ filter with its output map scaled by α.
struct FilterQAlpha {
  FilterQ base;
  double alpha = 1.0;

  Vec output(const Vec& xq) const { return alpha * (base.F_q * xq); }
};

/// Output-feedback tracking controller with state x_c = (x_q, x̂):
///   ẋ_c = A_c x_c + B_c y + B_r u_r,   u = F_c x_c + u_r.
struct TrackingController {
  Mat A_c, B_c, B_r, F_c;
  Vec x_c;
  Index n = 0;   // plant order (size of x̂)
  Index nq = 0;  // filter order (size of x_q)
  double alpha = 0.0;

  void reset() { x_c = Vec::Zero(A_c.rows()); }

  Vec output(const Vec& xc, const Vec& ur) const { return F_c * xc + ur; }

  Vec derivative(const Vec& xc, const Vec& y, const Vec& ur) const {
    Vec d = A_c * xc;
    d.noalias() += B_c * y;
    d.noalias() += B_r * ur;
    return d;
  }

  auto x_q() const { return x_c.head(nq); }
  auto x_hat() const { return x_c.tail(n); }
};

/// Block realization of the controller for filter gain α.
inline TrackingController assemble_controller(const LqtDesign& lqt, const ObserverDesign& obs,
                                              const FilterQAlpha& filt, const LinearPlant& lp) {
  const Index n = lp.n(), m = lp.m(), p = lp.p();
  const FilterQ& q = filt.base;
  const Index nq = q.nq();
  linalg::require_shape(lqt.F, m, n, "assemble_controller: F");
  linalg::require_shape(obs.L, n, p, "assemble_controller: L");
  linalg::require_shape(q.B_q, nq, p, "assemble_controller: B_q");
  linalg::require_shape(q.F_q, m, nq, "assemble_controller: F_q");

  TrackingController c;
  c.n = n;
  c.nq = nq;
  c.alpha = filt.alpha;
  c.A_c.resize(nq + n, nq + n);
  c.A_c << q.A_q, q.B_q * lp.C2, filt.alpha * lp.B2 * q.F_q,
      lp.A + lp.B2 * lqt.F + obs.L * lp.C2;
  c.B_c.resize(nq + n, p);
  c.B_c << -q.B_q, -obs.L;
  c.B_r = Mat::Zero(nq + n, m);
  c.B_r.bottomRows(n) = lp.B2;
  c.F_c.resize(m, nq + n);
  c.F_c << filt.alpha * q.F_q, lqt.F;
  c.reset();
  return c;
}

/// Advances x_c by one RK4 step with y and u_r held over the step and returns
/// u = F_c x_c + u_r at the start of the step.
inline Vec step_controller(TrackingController& ctrl, const Vec& y, const Vec& ur, double h) {
  if (!y.allFinite() || !ur.allFinite()) {
    throw DivergenceError("step_controller: non-finite measurement or feed-forward");
  }
  const Vec u = ctrl.output(ctrl.x_c, ur);
  const Vec& x = ctrl.x_c;
  const Vec k1 = ctrl.derivative(x, y, ur);
  const Vec k2 = ctrl.derivative(x + 0.5 * h * k1, y, ur);
  const Vec k3 = ctrl.derivative(x + 0.5 * h * k2, y, ur);
  const Vec k4 = ctrl.derivative(x + h * k3, y, ur);
  ctrl.x_c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return u;
}

/// Closed loop of the linear plant and the controller.
struct ClosedLoop {
  Mat A;      // state (x, x_q, x̂)
  Mat S;      // (x, x_q, x̂ − x) = S (x, x_q, x̂)
  Mat A_bar;  // S A S⁻¹, block upper triangular
};

inline ClosedLoop closed_loop_matrix(const TrackingController& ctrl, const LinearPlant& lp) {
  const Index n = lp.n(), nc = ctrl.A_c.rows(), nq = ctrl.nq;
  ClosedLoop cl;
  cl.A.resize(n + nc, n + nc);
  cl.A << lp.A, lp.B2 * ctrl.F_c, ctrl.B_c * lp.C2, ctrl.A_c;
  cl.S = Mat::Identity(n + nc, n + nc);
  cl.S.block(n + nq, 0, n, n) = -Mat::Identity(n, n);
  Mat s_inv = Mat::Identity(n + nc, n + nc);
  s_inv.block(n + nq, 0, n, n) = Mat::Identity(n, n);
  cl.A_bar = cl.S * cl.A * s_inv;
  return cl;
}

/// Signals driven by the feed-forward u_r.
enum class UrChannel { u, y, y_tilde };

inline StateSpace ur_system(const TrackingController& ctrl, const LinearPlant& lp,
                            UrChannel channel) {
  const Index n = lp.n(), nc = ctrl.A_c.rows(), m = lp.m();
  StateSpace ss;
  ss.A = closed_loop_matrix(ctrl, lp).A;
  ss.B.resize(n + nc, m);
  ss.B << lp.B2, ctrl.B_r;
  switch (channel) {
    case UrChannel::u:
      ss.C.resize(m, n + nc);
      ss.C << Mat::Zero(m, n), ctrl.F_c;
      ss.D = Mat::Identity(m, m);
      break;
    case UrChannel::y:
      ss.C.resize(lp.p(), n + nc);
      ss.C << lp.C2, Mat::Zero(lp.p(), nc);
      ss.D = Mat::Zero(lp.p(), m);
      break;
    case UrChannel::y_tilde:
      ss.C.resize(lp.p1(), n + nc);
      ss.C << lp.E, Mat::Zero(lp.p1(), nc);
      ss.D = Mat::Zero(lp.p1(), m);
      break;
  }
  return ss;
}

/// Frequency response from u_r to the chosen signal at each s in `grid`.
inline std::vector<CMat> transfer_from_ur(const TrackingController& ctrl, const LinearPlant& lp,
                                          UrChannel channel, const std::vector<Complex>& grid) {
  const StateSpace ss = ur_system(ctrl, lp, channel);
  if (!linalg::is_hurwitz(ss.A)) {
    throw NumericalError("transfer_from_ur: closed loop is not stable");
  }
  std::vector<CMat> out;
  out.reserve(grid.size());
  for (const Complex& s : grid) out.push_back(frequency_response(ss, s));
  return out;
}

}  // namespace rlqt
