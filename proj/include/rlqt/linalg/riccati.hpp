#pragma once

#include <string>

#include "rlqt/linalg/lyapunov.hpp"
#include "rlqt/linalg/schur.hpp"

namespace rlqt::linalg {

/// Stabilizing solution X of  AᵀX + XA − XGX + Q = 0  (G, Q symmetric, possibly
/// indefinite), i.e. A − GX is Hurwitz.
///
/// The stable invariant subspace of the Hamiltonian [A −G; −Q −Aᵀ] is
/// extracted from an ordered real Schur form; the Hamiltonian is balanced by a
/// diagonal similarity first and the basis mapped back afterwards.
inline Mat solve_riccati_stabilizing(const Mat& a, const Mat& g, const Mat& q,
                                     bool balance_hamiltonian = true) {
  require_square(a, "riccati: A");
  const Index n = a.rows();
  require_shape(g, n, n, "riccati: G");
  require_shape(q, n, n, "riccati: Q");
  require_finite(a, "riccati: A");
  require_finite(g, "riccati: G");
  require_finite(q, "riccati: Q");
  if (!is_symmetric(g) || !is_symmetric(q)) {
    throw DimensionError("riccati: G and Q must be symmetric");
  }

  Mat h(2 * n, 2 * n);
  h << a, -symmetrize(g), -symmetrize(q), -a.transpose();

  Vec scale = Vec::Ones(2 * n);
  if (balance_hamiltonian) {
    Balanced b = balance(h);
    h = std::move(b.matrix);
    scale = std::move(b.scale);
  }

  SchurForm s = real_schur(h);
  const double axis_tol = 1e-10 * std::max(1.0, h.norm());
  for (const Complex& ev : schur_eigenvalues(s.T)) {
    if (std::abs(ev.real()) <= axis_tol) {
      throw RiccatiError(
          "riccati: Hamiltonian has eigenvalues on the imaginary axis; "
          "no stabilizing solution (stabilizability/detectability violated)");
    }
  }
  const Index stable = reorder_schur(s, [](const Complex& ev) { return ev.real() < 0.0; });
  if (stable != n) {
    throw RiccatiError("riccati: stable invariant subspace has dimension " +
                       std::to_string(stable) + ", expected " + std::to_string(n));
  }

  const Mat basis = scale.asDiagonal() * s.Q.leftCols(n);
  const Mat u1 = basis.topRows(n);
  const Mat u2 = basis.bottomRows(n);
  Eigen::FullPivLU<Mat> lu(u1.transpose());
  if (lu.rcond() < 1e-14) {
    throw RiccatiError("riccati: stable subspace is not complementary to [0; I]");
  }
  const Mat x = lu.solve(u2.transpose()).transpose();
  require_finite(x, "riccati: solution");
  return symmetrize(x);
}

/// Residual AᵀP + PA − P B R⁻¹ Bᵀ P + Q.
inline Mat care_residual(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                         const Mat& p) {
  const Mat rinv_bt = r.llt().solve(b.transpose());
  return a.transpose() * p + p * a - p * b * rinv_bt * p + q;
}

/// Stabilizing solution of the continuous-time algebraic Riccati equation
///   AᵀP + PA − P B R⁻¹ Bᵀ P + Q = 0,  with P ⪰ 0.
inline Mat solve_care(const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
  require_square(a, "solve_care: A");
  const Index n = a.rows();
  if (b.rows() != n || b.cols() == 0) throw DimensionError("solve_care: B has wrong row count");
  require_shape(q, n, n, "solve_care: Q");
  require_shape(r, b.cols(), b.cols(), "solve_care: R");
  require_finite(r, "solve_care: R");
  if (!is_symmetric(r)) throw DimensionError("solve_care: R must be symmetric");
  Eigen::LLT<Mat> llt(symmetrize(r));
  if (llt.info() != Eigen::Success) {
    throw RiccatiError("solve_care: R is not positive definite");
  }
  if (min_symmetric_eigenvalue(q) < -1e-12 * std::max(1.0, q.norm())) {
    throw RiccatiError("solve_care: Q is not positive semi-definite");
  }
  const Mat g = b * llt.solve(b.transpose());
  Mat p = solve_riccati_stabilizing(a, g, q);

  // Newton refinement in correction form: (A − GP)ᵀΔ + Δ(A − GP) + Res(P) = 0.
  // The Schur basis loses accuracy when P is large; solving for the small
  // correction keeps the Lyapunov error relative to ‖Δ‖ rather than ‖P‖.
  // The residual is formed in extended precision: its terms are O(‖P‖²‖G‖)
  // and cancel almost completely near the solution.
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMat al = a.cast<long double>(), gl = g.cast<long double>(), ql = q.cast<long double>();
  auto residual = [&](const Mat& x) {
    const LMat xl = x.cast<long double>();
    const LMat r = al.transpose() * xl + xl * al - xl * gl * xl + ql;
    return Mat((0.5L * (r + r.transpose())).cast<double>());
  };
  Mat res = residual(p);
  double res_norm = res.norm();
  for (int it = 0; it < 4 && res_norm > 0.0; ++it) {
    Mat delta;
    try {
      delta = solve_lyapunov(a - g * p, res);
    } catch (const NumericalError&) {
      break;
    }
    const Mat next = p + delta;
    Mat next_res = residual(next);
    const double next_norm = next_res.norm();
    if (!(next_norm < res_norm)) break;
    p = next;
    res = std::move(next_res);
    res_norm = next_norm;
  }
  const double pnorm = std::max(1.0, p.norm());
  if (min_symmetric_eigenvalue(p) < -1e-9 * pnorm) {
    throw RiccatiError("solve_care: stabilizing solution is indefinite");
  }
  return p;
}

}  // namespace rlqt::linalg
