#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rlqt/linalg.hpp"
#include "rlqt/synthesis/augmented.hpp"

namespace rlqt {

/// ẋ = A x + B u,  y = C x + D u.
struct StateSpace {
  Mat A, B, C, D;

  void validate() const {
    if (A.rows() != A.cols()) throw DimensionError("StateSpace: A must be square");
    linalg::require_shape(B, A.rows(), B.cols(), "StateSpace.B");
    linalg::require_shape(C, C.rows(), A.rows(), "StateSpace.C");
    linalg::require_shape(D, C.rows(), B.cols(), "StateSpace.D");
  }
};

/// G(s) = C (sI − A)⁻¹ B + D.
inline CMat frequency_response(const StateSpace& ss, Complex s) {
  const Index n = ss.A.rows();
  CMat g = ss.D.cast<Complex>();
  if (n == 0) return g;
  const CMat m = s * CMat::Identity(n, n) - ss.A.cast<Complex>();
  g += ss.C.cast<Complex>() * m.partialPivLu().solve(ss.B.cast<Complex>());
  return g;
}

inline double sigma_max(const CMat& g) {
  if (g.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMat>(g).singularValues()(0);
}

namespace detail {

// Bounded-real Hamiltonian: jω is an eigenvalue iff γ is a singular value of G(jω).
inline Mat bounded_real_hamiltonian(const StateSpace& ss, double gamma) {
  const Index n = ss.A.rows(), m = ss.B.cols(), p = ss.C.rows();
  const Mat r = gamma * gamma * Mat::Identity(m, m) - ss.D.transpose() * ss.D;
  Eigen::LLT<Mat> llt(r);
  if (llt.info() != Eigen::Success) throw NumericalError("hinf_norm: γ below σmax(D)");
  const Mat ae = ss.A + ss.B * llt.solve(ss.D.transpose() * ss.C);
  Mat h(2 * n, 2 * n);
  h << ae, ss.B * llt.solve(ss.B.transpose()),
      -ss.C.transpose() * (Mat::Identity(p, p) + ss.D * llt.solve(ss.D.transpose())) * ss.C,
      -ae.transpose();
  return h;
}

}  // namespace detail

/// L∞ norm of a stable system by bisection on the imaginary-axis eigenvalue
/// test of the bounded-real Hamiltonian, to relative tolerance `rel_tol`.
///
/// Candidate axis eigenvalues are confirmed by evaluating σmax(G(jω)) at their
/// frequency; confirmed values also tighten the lower bound.
inline double hinf_norm(const StateSpace& ss, double rel_tol = 1e-8) {
  ss.validate();
  linalg::require_finite(ss.A, "hinf_norm: A");
  const Index n = ss.A.rows();
  const double d_norm = linalg::norm2(ss.D);
  if (n == 0 || ss.B.isZero(0.0) || ss.C.isZero(0.0)) return d_norm;

  const auto poles = linalg::eigenvalues(ss.A);
  if (!(linalg::max_real_part(poles) < 0.0)) {
    throw NumericalError("hinf_norm: system is not stable");
  }

  // Lower bound from D, DC and the pole frequencies.
  double lo = std::max(d_norm, sigma_max(frequency_response(ss, 0.0)));
  for (const Complex& z : poles) {
    lo = std::max(lo, sigma_max(frequency_response(ss, Complex(0.0, std::abs(z)))));
    lo = std::max(lo, sigma_max(frequency_response(ss, Complex(0.0, std::abs(z.imag())))));
  }

  // Returns the largest confirmed σmax over axis crossings at level γ, or −1.
  auto crossing = [&](double gamma) {
    const Mat h = detail::bounded_real_hamiltonian(ss, gamma);
    double best = -1.0;
    for (const Complex& ev : linalg::eigenvalues(h)) {
      if (ev.imag() < 0.0) continue;
      if (std::abs(ev.real()) > 1e-6 * std::max(1.0, std::abs(ev))) continue;
      const double s = sigma_max(frequency_response(ss, Complex(0.0, ev.imag())));
      if (s >= gamma * (1.0 - 1e-8)) best = std::max(best, s);
    }
    return best;
  };

  if (lo == 0.0) {
    const double tiny = 1e-14 * std::max(1.0, linalg::norm2(ss.B) * linalg::norm2(ss.C));
    const double s = crossing(tiny);
    if (s < 0.0) return 0.0;
    lo = s;
  }

  double hi = 2.0 * lo;
  for (int it = 0; it < 200; ++it) {
    const double s = crossing(hi);
    if (s < 0.0) break;
    lo = std::max(lo, s);
    hi = 2.0 * std::max(hi, s);
  }
  while (hi - lo > rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    const double s = crossing(mid);
    if (s < 0.0) {
      hi = mid;
    } else {
      lo = std::max(mid, s);
    }
  }
  return 0.5 * (lo + hi);
}

/// Central H∞ controller ẋ_q = A_q x_q + B_q f, u_f = F_q x_q for the
/// augmented plant (residual f in, u_f out).
struct FilterQ {
  Mat A_q, B_q, F_q;
  double gamma = 0.0;     // prescribed level
  double achieved = 0.0;  // a posteriori closed-loop ‖T_zw‖∞
  Mat X, Y;
  double rho = 0.0;          // ρ(XY)
  double regularization = 0.0;  // ε added to the measurement channel, 0 if none

  Index nq() const { return A_q.rows(); }
};

/// Result of the two-Riccati feasibility test at one γ.
struct HinfFeasibility {
  bool feasible = false;
  std::string stage;  // failing stage when infeasible
  std::string reason;
  Mat X, Y;
  double rho = 0.0;
};

namespace detail {

struct RegularPlant {
  GeneralizedPlant g;
  double eps = 0.0;
};

// Checks D11 = 0, D22 = 0 and D12 full column rank; pads D21 with ε·I when it
// is not of full row rank.
inline RegularPlant regularize(const GeneralizedPlant& gp, double eps) {
  gp.validate();
  if (!gp.D11.isZero(0.0)) throw SynthesisError("regularity", "D11 must be zero");
  if (!gp.D22.isZero(0.0)) throw SynthesisError("regularity", "D22 must be zero");
  const Vec s12 = Eigen::JacobiSVD<Mat>(gp.D12).singularValues();
  if (gp.D12.rows() < gp.D12.cols() || s12.minCoeff() <= 1e-12 * std::max(1.0, s12.maxCoeff())) {
    throw SynthesisError("regularity", "D12 must have full column rank");
  }
  RegularPlant out{gp, 0.0};
  const Index p = gp.ny();
  bool full_row = gp.D21.cols() >= p;
  if (full_row) {
    const Vec s21 = Eigen::JacobiSVD<Mat>(gp.D21).singularValues();
    full_row = s21(p - 1) > 1e-12 * std::max(1.0, s21(0));
  }
  if (!full_row) {
    out.eps = eps;
    Mat b1(gp.n(), gp.nw() + p), d21(p, gp.nw() + p), d11(gp.nz(), gp.nw() + p);
    b1 << gp.B1, Mat::Zero(gp.n(), p);
    d21 << gp.D21, eps * Mat::Identity(p, p);
    d11 << gp.D11, Mat::Zero(gp.nz(), p);
    out.g.B1 = b1;
    out.g.D21 = d21;
    out.g.D11 = d11;
  }
  return out;
}

struct CentralController {
  Mat A, B, C;
};

inline CentralController central_controller(const GeneralizedPlant& g, double gamma,
                                            const Mat& x, const Mat& y) {
  const Mat r1 = g.D12.transpose() * g.D12;
  const Mat r2 = g.D21 * g.D21.transpose();
  const double ig2 = 1.0 / (gamma * gamma);
  const Mat f = -r1.llt().solve(g.B2.transpose() * x + g.D12.transpose() * g.C1);
  const Mat l = -(y * g.C2.transpose() + g.B1 * g.D21.transpose()) *
                r2.llt().solve(Mat::Identity(g.ny(), g.ny())).eval();
  const Index n = g.n();
  Eigen::FullPivLU<Mat> zlu(Mat::Identity(n, n) - ig2 * y * x);
  if (!zlu.isInvertible()) {
    throw SynthesisError("coupling", "I − γ⁻²YX is singular");
  }
  const Mat zl = zlu.solve(l);
  CentralController k;
  k.A = g.A + ig2 * g.B1 * g.B1.transpose() * x + g.B2 * f +
        zl * (g.C2 + ig2 * g.D21 * g.B1.transpose() * x);
  k.B = -zl;
  k.C = f;
  return k;
}

}  // namespace detail

/// Two-Riccati feasibility of level γ for a plant with D11 = 0, D22 = 0,
/// D12 full column rank and D21 full row rank (general cross terms allowed).
inline HinfFeasibility hinf_feasibility(const GeneralizedPlant& g, double gamma) {
  HinfFeasibility out;
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    out.stage = "gamma";
    out.reason = "γ must be positive and finite";
    return out;
  }
  const double ig2 = 1.0 / (gamma * gamma);
  const Index nz = g.nz(), nw = g.nw();

  const Mat r1 = g.D12.transpose() * g.D12;
  const Mat r1_d12t = r1.llt().solve(g.D12.transpose());
  const Mat ax = g.A - g.B2 * r1_d12t * g.C1;
  const Mat gx = g.B2 * r1.llt().solve(g.B2.transpose()) - ig2 * g.B1 * g.B1.transpose();
  const Mat qx = g.C1.transpose() * (Mat::Identity(nz, nz) - g.D12 * r1_d12t) * g.C1;

  const Mat r2 = g.D21 * g.D21.transpose();
  const Mat r2_c2 = r2.llt().solve(g.C2);
  const Mat ay = g.A - g.B1 * g.D21.transpose() * r2_c2;
  const Mat gy = g.C2.transpose() * r2_c2 - ig2 * g.C1.transpose() * g.C1;
  const Mat qy = g.B1 *
                 (Mat::Identity(nw, nw) - g.D21.transpose() * r2.llt().solve(g.D21)) *
                 g.B1.transpose();

  auto psd = [](const Mat& m) {
    return linalg::min_symmetric_eigenvalue(m) >= -1e-9 * std::max(1.0, m.norm());
  };
  try {
    out.X = linalg::solve_riccati_stabilizing(ax, linalg::symmetrize(gx), linalg::symmetrize(qx));
  } catch (const NumericalError& e) {
    out.stage = "X-Riccati";
    out.reason = e.what();
    return out;
  }
  if (!psd(out.X)) {
    out.stage = "X-Riccati";
    out.reason = "stabilizing solution X is not positive semi-definite";
    return out;
  }
  try {
    out.Y = linalg::solve_riccati_stabilizing(ay.transpose(), linalg::symmetrize(gy),
                                              linalg::symmetrize(qy));
  } catch (const NumericalError& e) {
    out.stage = "Y-Riccati";
    out.reason = e.what();
    return out;
  }
  if (!psd(out.Y)) {
    out.stage = "Y-Riccati";
    out.reason = "stabilizing solution Y is not positive semi-definite";
    return out;
  }
  double rho = 0.0;
  for (const Complex& z : linalg::eigenvalues(out.X * out.Y)) rho = std::max(rho, std::abs(z));
  out.rho = rho;
  if (!(rho < gamma * gamma)) {
    out.stage = "coupling";
    out.reason = "ρ(XY) = " + std::to_string(rho) + " ≥ γ² = " + std::to_string(gamma * gamma);
    return out;
  }
  out.feasible = true;
  return out;
}

/// Interconnection of the generalized plant (D22 = 0) with a strictly proper
/// controller (A_k, B_k, C_k) from y to u; the map w → z.
inline StateSpace lower_lft(const GeneralizedPlant& g, const Mat& ak, const Mat& bk,
                            const Mat& ck) {
  if (!g.D22.isZero(0.0)) throw DimensionError("lower_lft: D22 must be zero");
  const Index n = g.n(), nk = ak.rows();
  StateSpace cl;
  cl.A.resize(n + nk, n + nk);
  cl.A << g.A, g.B2 * ck, bk * g.C2, ak;
  cl.B.resize(n + nk, g.nw());
  cl.B << g.B1, bk * g.D21;
  cl.C.resize(g.nz(), n + nk);
  cl.C << g.C1, g.D12 * ck;
  cl.D = g.D11;
  return cl;
}

struct HinfOptions {
  double regularization = 1e-6;
  double norm_tol = 1e-8;
  bool require_stable_filter = true;
};

/// Central H∞ filter for the augmented plant at level γ, verified a posteriori
/// by the Hamiltonian bisection norm of the closed loop.
inline FilterQ synthesize_qfilter(const GeneralizedPlant& gp, double gamma,
                                  const HinfOptions& opt = {}) {
  const auto reg = detail::regularize(gp, opt.regularization);
  const auto feas = hinf_feasibility(reg.g, gamma);
  if (!feas.feasible) {
    throw SynthesisError(feas.stage, "γ = " + std::to_string(gamma) +
                                         " infeasible (below the optimum?): " + feas.reason);
  }
  const auto k = detail::central_controller(reg.g, gamma, feas.X, feas.Y);
  FilterQ q;
  q.A_q = k.A;
  q.B_q = k.B;
  q.F_q = k.C;
  q.gamma = gamma;
  q.X = feas.X;
  q.Y = feas.Y;
  q.rho = feas.rho;
  q.regularization = reg.eps;
  linalg::require_finite(q.A_q, "synthesize_qfilter: A_q");

  if (opt.require_stable_filter && !linalg::is_hurwitz(q.A_q)) {
    throw SynthesisError("filter", "central controller A_q is not Hurwitz at γ = " +
                                       std::to_string(gamma));
  }
  const StateSpace cl = lower_lft(gp, q.A_q, q.B_q, q.F_q);
  if (!linalg::is_hurwitz(cl.A)) {
    throw SynthesisError("closed-loop", "interconnection with the filter is not stable");
  }
  q.achieved = hinf_norm(cl, opt.norm_tol);
  if (!(q.achieved < gamma)) {
    throw SynthesisError("a-posteriori", "closed-loop norm " + std::to_string(q.achieved) +
                                             " is not below γ = " + std::to_string(gamma));
  }
  return q;
}

/// Smallest feasible γ in [lo, hi] by bisection on the two-Riccati test.
inline double optimal_gamma(const GeneralizedPlant& gp, double lo, double hi,
                            double rel_tol = 1e-6, double regularization = 1e-6) {
  const auto reg = detail::regularize(gp, regularization);
  if (!hinf_feasibility(reg.g, hi).feasible) {
    throw SynthesisError("gamma-search", "upper bound γ = " + std::to_string(hi) +
                                             " is infeasible");
  }
  if (hinf_feasibility(reg.g, lo).feasible) return lo;
  while (hi - lo > rel_tol * hi) {
    const double mid = std::sqrt(lo * hi);
    if (hinf_feasibility(reg.g, mid).feasible) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace rlqt
