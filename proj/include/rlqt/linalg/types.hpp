#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

#include "rlqt/errors.hpp"

namespace rlqt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Index = Eigen::Index;
using Complex = std::complex<double>;

namespace linalg {

inline void require_finite(const Mat& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError(what + ": non-finite entries");
}

inline void require_square(const Mat& m, const std::string& what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(what + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_shape(const Mat& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()));
  }
}

inline bool is_symmetric(const Mat& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.norm());
  return (m - m.transpose()).norm() <= rel_tol * scale;
}

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Spectral norm.
inline double norm2(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

inline double min_symmetric_eigenvalue(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

/// Symmetric positive semi-definite square root (for weights that may be singular).
inline Mat psd_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Block-diagonal concatenation.
inline Mat blkdiag(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace linalg
}  // namespace rlqt
