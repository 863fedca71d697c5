#pragma once

#include "rlqt/linalg/schur.hpp"

namespace rlqt::linalg {

namespace detail {

// Solve Tᵀ Y + Y T = C for upper quasi-triangular T, block by block.
inline Mat solve_quasi_triangular_lyapunov(const Mat& t, const Mat& c) {
  const auto blocks = schur_blocks(t);
  const Index n = t.rows();
  Mat y = Mat::Zero(n, n);
  for (const auto& bi : blocks) {
    for (const auto& bj : blocks) {
      Mat rhs = c.block(bi.start, bj.start, bi.size, bj.size);
      // Σ_{l<i} T_liᵀ Y_lj
      if (bi.start > 0) {
        rhs.noalias() -= t.block(0, bi.start, bi.start, bi.size).transpose() *
                         y.block(0, bj.start, bi.start, bj.size);
      }
      // Σ_{l<j} Y_il T_lj
      if (bj.start > 0) {
        rhs.noalias() -= y.block(bi.start, 0, bi.size, bj.start) *
                         t.block(0, bj.start, bj.start, bj.size);
      }
      const Mat tii = t.block(bi.start, bi.start, bi.size, bi.size);
      const Mat tjj = t.block(bj.start, bj.start, bj.size, bj.size);
      const Index k = bi.size * bj.size;
      // vec(Tiiᵀ Y + Y Tjj) = (I ⊗ Tiiᵀ + Tjjᵀ ⊗ I) vec(Y)
      Mat kron = Mat::Zero(k, k);
      for (Index cc = 0; cc < bj.size; ++cc) {
        kron.block(cc * bi.size, cc * bi.size, bi.size, bi.size) += tii.transpose();
        for (Index r = 0; r < bj.size; ++r) {
          kron.block(cc * bi.size, r * bi.size, bi.size, bi.size) +=
              tjj(r, cc) * Mat::Identity(bi.size, bi.size);
        }
      }
      Eigen::FullPivLU<Mat> lu(kron);
      if (!lu.isInvertible()) {
        throw NumericalError("solve_lyapunov: singular block subproblem");
      }
      const Vec sol = lu.solve(Eigen::Map<const Vec>(rhs.data(), k));
      y.block(bi.start, bj.start, bi.size, bj.size) =
          Eigen::Map<const Mat>(sol.data(), bi.size, bj.size);
    }
  }
  return y;
}

}  // namespace detail

/// Solve AᵀX + XA + W = 0 for Hurwitz A (Bartels-Stewart on the real Schur form).
inline Mat solve_lyapunov(const Mat& a, const Mat& w) {
  require_square(a, "solve_lyapunov: A");
  require_shape(w, a.rows(), a.rows(), "solve_lyapunov: W");
  require_finite(a, "solve_lyapunov: A");
  require_finite(w, "solve_lyapunov: W");
  if (!is_symmetric(w)) throw DimensionError("solve_lyapunov: W must be symmetric");

  const SchurForm s = real_schur(a);
  const double max_re = max_real_part(schur_eigenvalues(s.T));
  if (max_re >= 0.0) {
    throw NumericalError("solve_lyapunov: A is not Hurwitz (max Re eig = " +
                         std::to_string(max_re) + ")");
  }
  const Mat c = -(s.Q.transpose() * w * s.Q);
  const Mat y = detail::solve_quasi_triangular_lyapunov(s.T, c);
  return symmetrize(s.Q * y * s.Q.transpose());
}

}  // namespace rlqt::linalg
