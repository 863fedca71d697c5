#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rlqt/linalg.hpp"

namespace rlqt {

/// Linearization of the plant about the origin:
///   ẋ = A x + B1 w + B2 u,   y = C2 x + D21 w,   z = C1 x + D12 u,   ỹ = E x.
struct LinearPlant {
  Mat A, B1, B2, C1, C2, D12, D21, E;

  Index n() const { return A.rows(); }
  Index m() const { return B2.cols(); }
  Index nw() const { return B1.cols(); }
  Index p() const { return C2.rows(); }
  Index pz() const { return C1.rows(); }
  Index p1() const { return E.rows(); }
  bool has_performance_output() const { return C1.size() > 0; }

  /// Throws DimensionError on inconsistent shapes or non-finite entries.
  void validate() const {
    using linalg::require_shape;
    linalg::require_square(A, "LinearPlant.A");
    const Index nn = n();
    if (B2.rows() != nn || B2.cols() == 0) throw DimensionError("LinearPlant.B2: bad shape");
    if (B1.rows() != nn) throw DimensionError("LinearPlant.B1: bad row count");
    if (C2.cols() != nn || C2.rows() == 0) throw DimensionError("LinearPlant.C2: bad shape");
    require_shape(D21, C2.rows(), B1.cols(), "LinearPlant.D21");
    if (E.cols() != nn || E.rows() == 0) throw DimensionError("LinearPlant.E: bad shape");
    if (has_performance_output()) {
      if (C1.cols() != nn) throw DimensionError("LinearPlant.C1: bad column count");
      require_shape(D12, C1.rows(), B2.cols(), "LinearPlant.D12");
      if ((C1.transpose() * D12).norm() > 1e-12 * std::max(1.0, C1.norm() * D12.norm())) {
        throw DimensionError("LinearPlant: C1ᵀD12 must vanish");
      }
    }
    for (const Mat* mat : {&A, &B1, &B2, &C1, &C2, &D12, &D21, &E}) {
      linalg::require_finite(*mat, "LinearPlant");
    }
  }
};

/// Performance output for tracking weights: C1ᵀC1 = EᵀQE, D12ᵀD12 = R, C1ᵀD12 = 0.
/// z stacks one block of p1 rows for the tracking error and m rows for the input.
inline LinearPlant with_performance_weights(LinearPlant lp, const Mat& q, const Mat& r) {
  const Index p1 = lp.p1(), m = lp.m(), n = lp.n();
  linalg::require_shape(q, p1, p1, "tracking weight Q");
  linalg::require_shape(r, m, m, "input weight R");
  lp.C1 = Mat::Zero(p1 + m, n);
  lp.C1.topRows(p1) = linalg::psd_sqrt(q) * lp.E;
  lp.D12 = Mat::Zero(p1 + m, m);
  lp.D12.bottomRows(m) = linalg::psd_sqrt(r);
  return lp;
}

// PBH rank test: rank [A − λI, B] = n for every eigenvalue with Re λ ≥ 0.
inline bool is_stabilizable(const Mat& a, const Mat& b, double tol = 1e-9) {
  const Index n = a.rows();
  for (const Complex& lambda : linalg::eigenvalues(a)) {
    if (lambda.real() < 0.0) continue;
    CMat pbh(n, n + b.cols());
    pbh.leftCols(n) = a.cast<Complex>() - lambda * CMat::Identity(n, n);
    pbh.rightCols(b.cols()) = b.cast<Complex>();
    Eigen::JacobiSVD<CMat> svd(pbh);
    const double smax = svd.singularValues()(0);
    if (svd.singularValues()(n - 1) <= tol * std::max(1.0, smax)) return false;
  }
  return true;
}

inline bool is_detectable(const Mat& c, const Mat& a, double tol = 1e-9) {
  return is_stabilizable(a.transpose(), c.transpose(), tol);
}

/// Rotary (Furuta) pendulum parameters. `l` is half the pendulum length.
struct PendulumParams {
  double Rm = 8.4;           // ohm
  double km = 0.042;         // V·s/rad
  double r = 0.085;          // m
  double l = 0.129 / 2.0;    // m
  double mp = 0.024;         // kg
  double g = 9.81;           // N/kg
  double br = 0.0005;        // N·m·s/rad
  double bp = 0.0001;        // N·m·s/rad
  double Jr = 2.3060e-4;     // N·m·s²/rad
  double Jp = 1.3313e-4;     // N·m·s²/rad

  double jt() const { return Jp * Jr - mp * mp * l * l * r * r; }

  void validate() const {
    const double vals[] = {Rm, km, r, l, mp, g, br, bp, Jr, Jp};
    for (double v : vals) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DimensionError("PendulumParams: all parameters must be finite and positive");
      }
    }
    if (!(jt() > 0.0)) throw DimensionError("PendulumParams: Jp·Jr − mp²l²r² must be positive");
  }
};

/// Disturbance/noise channels of the pendulum linearization.
inline Mat pendulum_b1() { return Eigen::Vector4d(0.012, 0.012, 1.0, 1.0).asDiagonal(); }
inline Mat pendulum_c2() {
  Mat c = Mat::Zero(2, 4);
  c(0, 0) = c(1, 1) = 1.0;
  return c;
}
inline Mat pendulum_d21() {
  Mat d = Mat::Zero(2, 4);
  d(0, 2) = d(1, 3) = 1e-4;
  return d;
}
inline Mat pendulum_e() {
  Mat e = Mat::Zero(1, 4);
  e(0, 0) = 1.0;
  return e;
}

/// State derivative of the pendulum for x = (θ1, θ2, θ̇1, θ̇2) and motor voltage u.
///
/// The equations of motion are implicit in the accelerations; each call
/// assembles the 2x2 mass matrix
///   [ Jr + Jp sin²θ2   −mp l r cos θ2 ] [θ̈1]   [ −Jp θ̇1θ̇2 sin2θ2 − mp l r θ̇2² sinθ2 − br θ̇1 + τ ]
///   [ −mp l r cos θ2    Jp            ] [θ̈2] = [ ½Jp θ̇1² sin2θ2 + mp g l sinθ2 − bp θ̇2          ]
/// with τ = km/Rm (u − km θ̇1), and solves it.
inline Eigen::Vector4d pendulum_rhs(const PendulumParams& p, const Eigen::Vector4d& x, double u) {
  const double s2 = std::sin(x(1)), c2 = std::cos(x(1));
  const double sin2 = std::sin(2.0 * x(1));
  const double d1 = x(2), d2 = x(3);
  const double tau = p.km / p.Rm * (u - p.km * d1);
  const double coupling = p.mp * p.l * p.r * c2;

  Eigen::Matrix2d mass;
  mass << p.Jr + p.Jp * s2 * s2, -coupling, -coupling, p.Jp;
  const Eigen::Vector2d rhs(
      -p.Jp * d1 * d2 * sin2 - p.mp * p.l * p.r * d2 * d2 * s2 - p.br * d1 + tau,
      0.5 * p.Jp * d1 * d1 * sin2 + p.mp * p.g * p.l * s2 - p.bp * d2);

  // Symmetric 2x2: eigenvalues from trace/determinant give the condition number.
  const double tr = mass.trace(), det = mass.determinant();
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lmin = 0.5 * tr - disc, lmax = 0.5 * tr + disc;
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    throw NumericalError("pendulum_rhs: mass matrix is singular or ill-conditioned");
  }
  const Eigen::Vector2d acc(( mass(1, 1) * rhs(0) - mass(0, 1) * rhs(1)) / det,
                            (-mass(1, 0) * rhs(0) + mass(0, 0) * rhs(1)) / det);
  return {d1, d2, acc(0), acc(1)};
}

/// Disturbed variant: w enters the state derivative through the B1 channel.
inline Eigen::Vector4d pendulum_rhs(const PendulumParams& p, const Eigen::Vector4d& x, double u,
                                    const Eigen::Vector4d& w, const Mat& b1 = pendulum_b1()) {
  return pendulum_rhs(p, x, u) + b1 * w;
}

/// Closed-form linearization of the pendulum about the upright equilibrium.
/// A and B2 are analytic; B1, C2, D21 and E are the fixed channel constants.
inline LinearPlant pendulum_linearize(const PendulumParams& p) {
  p.validate();
  const double jt = p.jt();
  const double mlr = p.mp * p.l * p.r;
  LinearPlant lp;
  lp.A = Mat::Zero(4, 4);
  lp.A(0, 2) = 1.0;
  lp.A(1, 3) = 1.0;
  lp.A(2, 1) = p.mp * p.mp * p.l * p.l * p.r * p.g / jt;
  lp.A(2, 2) = -p.Jp * p.br / jt - p.km * p.km * p.Jp / (p.Rm * jt);
  lp.A(2, 3) = -mlr * p.bp / jt;
  lp.A(3, 1) = p.Jr * p.mp * p.g * p.l / jt;
  lp.A(3, 2) = -mlr * p.br / jt - p.km * p.km * mlr / (p.Rm * jt);
  lp.A(3, 3) = -p.Jr * p.bp / jt;
  lp.B2 = Mat::Zero(4, 1);
  lp.B2(2, 0) = p.km * p.Jp / (p.Rm * jt);
  lp.B2(3, 0) = p.km * mlr / (p.Rm * jt);
  lp.B1 = pendulum_b1();
  lp.C2 = pendulum_c2();
  lp.D21 = pendulum_d21();
  lp.E = pendulum_e();
  return lp;
}

/// Generic nonlinear plant ẋ = f(x, u, w), y = g(x, w) with f(0,0,0) = 0.
struct NonlinearPlant {
  using Rhs = std::function<void(const Vec& x, const Vec& u, const Vec& w, Vec& xdot)>;
  using Output = std::function<void(const Vec& x, const Vec& w, Vec& y)>;

  Index n = 0, m = 0, nw = 0, p = 0;
  Rhs f;
  Output g;
};

/// The pendulum with disturbance entering the state derivative through `b1`
/// and measurements y = C2 x + D21 w.
inline NonlinearPlant make_pendulum_plant(const PendulumParams& params,
                                          const Mat& b1 = pendulum_b1(),
                                          const Mat& c2 = pendulum_c2(),
                                          const Mat& d21 = pendulum_d21()) {
  params.validate();
  linalg::require_shape(b1, 4, b1.cols(), "pendulum B1");
  linalg::require_shape(c2, c2.rows(), 4, "pendulum C2");
  linalg::require_shape(d21, c2.rows(), b1.cols(), "pendulum D21");
  NonlinearPlant nl;
  nl.n = 4;
  nl.m = 1;
  nl.nw = b1.cols();
  nl.p = c2.rows();
  nl.f = [params, b1](const Vec& x, const Vec& u, const Vec& w, Vec& xdot) {
    xdot = pendulum_rhs(params, Eigen::Vector4d(x), u(0));
    xdot.noalias() += b1 * w;
  };
  nl.g = [c2, d21](const Vec& x, const Vec& w, Vec& y) {
    y.noalias() = c2 * x;
    y.noalias() += d21 * w;
  };
  return nl;
}

/// A linear plant viewed as a (trivially) nonlinear one.
inline NonlinearPlant as_nonlinear(const LinearPlant& lp) {
  NonlinearPlant nl;
  nl.n = lp.n();
  nl.m = lp.m();
  nl.nw = lp.nw();
  nl.p = lp.p();
  nl.f = [a = lp.A, b1 = lp.B1, b2 = lp.B2](const Vec& x, const Vec& u, const Vec& w,
                                             Vec& xdot) {
    xdot.noalias() = a * x;
    xdot.noalias() += b2 * u;
    if (b1.cols() > 0) xdot.noalias() += b1 * w;
  };
  nl.g = [c2 = lp.C2, d21 = lp.D21](const Vec& x, const Vec& w, Vec& y) {
    y.noalias() = c2 * x;
    if (d21.cols() > 0) y.noalias() += d21 * w;
  };
  return nl;
}

/// Worst discrepancy of one analytic Jacobian against central differences.
struct JacobianCheck {
  std::string name;
  double max_rel_error = 0.0;
  Index row = -1;
  Index col = -1;
};

struct LinearizationReport {
  std::vector<JacobianCheck> checks;  // A, B1, B2, C2, D21

  double max_rel_error() const {
    double out = 0.0;
    for (const auto& c : checks) out = std::max(out, c.max_rel_error);
    return out;
  }
  const JacobianCheck& worst() const {
    return *std::max_element(checks.begin(), checks.end(), [](const auto& a, const auto& b) {
      return a.max_rel_error < b.max_rel_error;
    });
  }
};

namespace detail {

// Relative error of `analytic` against the finite-difference reference `fd`.
// Entries where the reference vanishes are scaled by the matrix magnitude.
inline JacobianCheck compare_jacobian(std::string name, const Mat& analytic, const Mat& fd) {
  JacobianCheck out{std::move(name)};
  const double scale = std::max(fd.cwiseAbs().maxCoeff(), analytic.cwiseAbs().maxCoeff());
  if (scale == 0.0) return out;
  for (Index i = 0; i < fd.rows(); ++i) {
    for (Index j = 0; j < fd.cols(); ++j) {
      const double ref = std::abs(fd(i, j));
      const double err = std::abs(analytic(i, j) - fd(i, j)) / (ref > 1e-8 * scale ? ref : scale);
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.row = i;
        out.col = j;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Central-difference Jacobians of `nl` at the origin compared with `lp`.
inline LinearizationReport verify_linearization(const NonlinearPlant& nl, const LinearPlant& lp,
                                                double step = 1e-6) {
  if (nl.n != lp.n() || nl.m != lp.m() || nl.nw != lp.nw() || nl.p != lp.p()) {
    throw DimensionError("verify_linearization: plant dimensions differ");
  }
  const Vec x0 = Vec::Zero(nl.n), u0 = Vec::Zero(nl.m), w0 = Vec::Zero(nl.nw);
  Vec fp(nl.n), fm(nl.n), yp(nl.p), ym(nl.p);

  auto jac_f = [&](int which, Index cols) {
    Mat j(nl.n, cols);
    for (Index k = 0; k < cols; ++k) {
      Vec xp = x0, xm = x0, up = u0, um = u0, wp = w0, wm = w0;
      Vec& vp = which == 0 ? xp : (which == 1 ? up : wp);
      Vec& vm = which == 0 ? xm : (which == 1 ? um : wm);
      vp(k) += step;
      vm(k) -= step;
      nl.f(xp, up, wp, fp);
      nl.f(xm, um, wm, fm);
      j.col(k) = (fp - fm) / (2.0 * step);
    }
    return j;
  };
  auto jac_g = [&](int which, Index cols) {
    Mat j(nl.p, cols);
    for (Index k = 0; k < cols; ++k) {
      Vec xp = x0, xm = x0, wp = w0, wm = w0;
      Vec& vp = which == 0 ? xp : wp;
      Vec& vm = which == 0 ? xm : wm;
      vp(k) += step;
      vm(k) -= step;
      nl.g(xp, wp, yp);
      nl.g(xm, wm, ym);
      j.col(k) = (yp - ym) / (2.0 * step);
    }
    return j;
  };

  LinearizationReport rep;
  rep.checks.push_back(detail::compare_jacobian("A", lp.A, jac_f(0, nl.n)));
  rep.checks.push_back(detail::compare_jacobian("B1", lp.B1, jac_f(2, nl.nw)));
  rep.checks.push_back(detail::compare_jacobian("B2", lp.B2, jac_f(1, nl.m)));
  rep.checks.push_back(detail::compare_jacobian("C2", lp.C2, jac_g(0, nl.n)));
  rep.checks.push_back(detail::compare_jacobian("D21", lp.D21, jac_g(1, nl.nw)));
  return rep;
}

}  // namespace rlqt
