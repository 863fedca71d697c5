#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "rlqt/linalg/types.hpp"

namespace rlqt::linalg {

/// Real Schur decomposition M = Q T Qᵀ with T quasi-upper-triangular.
struct SchurForm {
  Mat Q;
  Mat T;
};

struct SchurBlock {
  Index start;
  Index size;  // 1 or 2
};

namespace detail {

inline Index block_size_at(const Mat& t, Index i) {
  return (i + 1 < t.rows() && t(i + 1, i) != 0.0) ? 2 : 1;
}

// Eigenvalue with non-negative imaginary part of the block at i.
inline Complex block_eigenvalue(const Mat& t, Index i, Index size) {
  if (size == 1) return {t(i, i), 0.0};
  const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
  const double p = 0.5 * (a - d);
  const double disc = p * p + b * c;
  const double mid = 0.5 * (a + d);
  if (disc >= 0.0) return {mid + std::copysign(std::sqrt(disc), p), 0.0};
  return {mid, std::sqrt(-disc)};
}

// Split a 2x2 diagonal block at i with real eigenvalues into two 1x1 blocks.
inline void standardize_block(Mat& t, Mat& q, Index i) {
  const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
  if (c == 0.0) return;
  const double p = 0.5 * (a - d);
  const double disc = p * p + b * c;
  if (disc < 0.0) return;
  const double lambda = 0.5 * (a + d) + std::copysign(std::sqrt(disc), p);
  // Two candidate eigenvectors; keep the one with the larger norm.
  Eigen::Vector2d v1(b, lambda - a);
  Eigen::Vector2d v2(lambda - d, c);
  Eigen::Vector2d v = v1.norm() >= v2.norm() ? v1 : v2;
  if (v.norm() == 0.0) return;
  v.normalize();
  Eigen::Matrix2d g;
  g << v(0), -v(1), v(1), v(0);
  t.middleRows(i, 2) = g.transpose() * t.middleRows(i, 2);
  t.middleCols(i, 2) = t.middleCols(i, 2) * g;
  q.middleCols(i, 2) = q.middleCols(i, 2) * g;
  t(i + 1, i) = 0.0;
}

}  // namespace detail

inline std::vector<SchurBlock> schur_blocks(const Mat& t) {
  std::vector<SchurBlock> out;
  for (Index i = 0; i < t.rows();) {
    const Index s = detail::block_size_at(t, i);
    out.push_back({i, s});
    i += s;
  }
  return out;
}

/// Eigenvalues read off the diagonal blocks of a quasi-triangular matrix.
inline std::vector<Complex> schur_eigenvalues(const Mat& t) {
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(t.rows()));
  for (const auto& blk : schur_blocks(t)) {
    const Complex ev = detail::block_eigenvalue(t, blk.start, blk.size);
    if (blk.size == 1) {
      out.push_back(ev);
    } else if (ev.imag() == 0.0) {
      // Real pair left in a 2x2 block (only possible before standardization).
      const double a = t(blk.start, blk.start), d = t(blk.start + 1, blk.start + 1);
      out.push_back(ev);
      out.push_back({a + d - ev.real(), 0.0});
    } else {
      out.push_back(ev);
      out.push_back(std::conj(ev));
    }
  }
  return out;
}

/// Real Schur form computed by Francis double-shift QR (Eigen's RealSchur),
/// post-processed so every 2x2 diagonal block carries a complex-conjugate pair
/// and everything below the block diagonal is exactly zero.
inline SchurForm real_schur(const Mat& m) {
  require_square(m, "real_schur");
  require_finite(m, "real_schur");
  const Index n = m.rows();
  Eigen::RealSchur<Mat> rs(n);
  rs.setMaxIterations(40 * n);
  rs.compute(m, true);
  if (rs.info() != Eigen::Success) {
    throw NumericalError("real_schur: QR iteration did not converge within " +
                         std::to_string(40 * n) + " sweeps");
  }
  SchurForm out{rs.matrixU(), rs.matrixT()};
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 2; i < n; ++i) out.T(i, j) = 0.0;
  }
  for (Index i = 0; i + 1 < n;) {
    if (out.T(i + 1, i) != 0.0) {
      detail::standardize_block(out.T, out.Q, i);
      i += out.T(i + 1, i) != 0.0 ? 2 : 1;
    } else {
      ++i;
    }
  }
  return out;
}

/// Swap the adjacent diagonal blocks T11 (n1 x n1, at row j) and T22
/// (n2 x n2, at row j + n1) by an orthogonal similarity, accumulated into Q.
///
/// The invariant subspace of T22 is spanned by [X; I] where
/// T11 X - X T22 = -T12; an orthonormal basis from its QR factorization moves
/// T22's eigenvalues to the leading position.
inline void swap_adjacent_blocks(Mat& t, Mat& q, Index j, Index n1, Index n2) {
  const Index m = n1 + n2;
  const Mat t11 = t.block(j, j, n1, n1);
  const Mat t22 = t.block(j + n1, j + n1, n2, n2);
  const Mat t12 = t.block(j, j + n1, n1, n2);

  // Kronecker form of the small Sylvester equation (at most 4x4).
  const Index k = n1 * n2;
  Mat kron = Mat::Zero(k, k);
  for (Index c = 0; c < n2; ++c) {
    kron.block(c * n1, c * n1, n1, n1) += t11;
    for (Index r = 0; r < n2; ++r) {
      kron.block(c * n1, r * n1, n1, n1) -= t22(r, c) * Mat::Identity(n1, n1);
    }
  }
  Eigen::FullPivLU<Mat> lu(kron);
  if (!lu.isInvertible()) {
    throw NumericalError("swap_adjacent_blocks: blocks share an eigenvalue");
  }
  const Vec rhs = -Eigen::Map<const Vec>(t12.data(), k);
  const Vec x = lu.solve(rhs);

  Mat basis(m, n2);
  basis.topRows(n1) = Eigen::Map<const Mat>(x.data(), n1, n2);
  basis.bottomRows(n2).setIdentity();
  const Mat g = Eigen::HouseholderQR<Mat>(basis).householderQ() * Mat::Identity(m, m);

  t.middleRows(j, m) = g.transpose() * t.middleRows(j, m);
  t.middleCols(j, m) = t.middleCols(j, m) * g;
  q.middleCols(j, m) = q.middleCols(j, m) * g;

  const double residual = t.block(j + n2, j, n1, n2).norm();
  if (residual > 1e-8 * std::max(1.0, t.block(j, j, m, m).norm())) {
    throw NumericalError("swap_adjacent_blocks: swap too ill-conditioned (residual " +
                         std::to_string(residual) + ")");
  }
  t.block(j + n2, j, n1, n2).setZero();
  if (n2 == 2) detail::standardize_block(t, q, j);
  if (n1 == 2) detail::standardize_block(t, q, j + n2);
}

/// Reorder a real Schur form so that every block whose eigenvalue satisfies
/// `select` comes first. Returns the dimension of the leading invariant
/// subspace spanned by the first columns of Q.
template <class Select>
Index reorder_schur(SchurForm& s, Select select) {
  const Index n = s.T.rows();
  Index ks = 0;
  for (Index pos = 0; pos < n;) {
    const Index sz = detail::block_size_at(s.T, pos);
    if (select(detail::block_eigenvalue(s.T, pos, sz))) {
      Index cur = pos;
      while (cur > ks) {
        const Index prev = (cur - 2 >= ks && s.T(cur - 1, cur - 2) != 0.0) ? 2 : 1;
        swap_adjacent_blocks(s.T, s.Q, cur - prev, prev, sz);
        cur -= prev;
      }
      ks += sz;
    }
    pos += sz;
  }
  return ks;
}

/// Eigenvalues of a general real matrix.
inline std::vector<Complex> eigenvalues(const Mat& m) {
  return schur_eigenvalues(real_schur(m).T);
}

inline double max_real_part(const std::vector<Complex>& ev) {
  double out = -std::numeric_limits<double>::infinity();
  for (const auto& z : ev) out = std::max(out, z.real());
  return out;
}

inline bool is_hurwitz(const Mat& m) { return max_real_part(eigenvalues(m)) < 0.0; }

/// Diagonal similarity D⁻¹ M D with power-of-two scaling (Parlett-Reinsch).
struct Balanced {
  Mat matrix;
  Vec scale;  // diagonal of D
};

inline Balanced balance(const Mat& m) {
  require_square(m, "balance");
  constexpr double kRadix = 2.0;
  constexpr double kRadix2 = kRadix * kRadix;
  const Index n = m.rows();
  Balanced out{m, Vec::Ones(n)};
  Mat& b = out.matrix;
  bool done = false;
  for (int sweep = 0; !done && sweep < 200; ++sweep) {
    done = true;
    for (Index i = 0; i < n; ++i) {
      double c = b.col(i).cwiseAbs().sum() - std::abs(b(i, i));
      double r = b.row(i).cwiseAbs().sum() - std::abs(b(i, i));
      if (c == 0.0 || r == 0.0) continue;
      double g = r / kRadix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= kRadix;
        c *= kRadix2;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadix2;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        out.scale(i) *= f;
        b.row(i) /= f;
        b.col(i) *= f;
      }
    }
  }
  return out;
}

}  // namespace rlqt::linalg
