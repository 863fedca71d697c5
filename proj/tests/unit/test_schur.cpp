#include <gtest/gtest.h>

#include <random>

#include "oracles/eigen_oracle.hpp"
#include "rlqt/linalg.hpp"

namespace {

using rlqt::Mat;
using namespace rlqt::linalg;

Mat random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(n, n);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

bool is_quasi_triangular(const Mat& t) {
  const auto n = t.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 2; i < n; ++i) {
      if (t(i, j) != 0.0) return false;
    }
  }
  for (Eigen::Index i = 0; i + 2 < n; ++i) {
    if (t(i + 1, i) != 0.0 && t(i + 2, i + 1) != 0.0) return false;
  }
  return true;
}

TEST(RealSchur, IdentityIsItsOwnSchurForm) {
  const SchurForm s = real_schur(Mat::Identity(3, 3));
  EXPECT_TRUE(s.T.isApprox(Mat::Identity(3, 3)));
  EXPECT_TRUE((s.Q.transpose() * s.Q).isApprox(Mat::Identity(3, 3)));
  EXPECT_LE((s.Q * s.T * s.Q.transpose() - Mat::Identity(3, 3)).norm(), 1e-14);
}

TEST(RealSchur, DiagonalEigenvaluesOnDiagonal) {
  Mat d = Eigen::Vector3d(-1.0, 2.0, 5.0).asDiagonal();
  const SchurForm s = real_schur(d);
  std::vector<double> diag{s.T(0, 0), s.T(1, 1), s.T(2, 2)};
  std::sort(diag.begin(), diag.end());
  EXPECT_NEAR(diag[0], -1.0, 1e-14);
  EXPECT_NEAR(diag[1], 2.0, 1e-14);
  EXPECT_NEAR(diag[2], 5.0, 1e-14);
}

TEST(RealSchur, RejectsNonSquare) {
  EXPECT_THROW(real_schur(Mat::Zero(2, 3)), rlqt::DimensionError);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(real_schur(bad), rlqt::NumericalError);
}

TEST(RealSchur, EigenvaluesMatchCharacteristicPolynomialOracle) {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat m = random_matrix(rng, 6);
    const auto ev = schur_eigenvalues(real_schur(m).T);
    const auto ref = oracle::eigenvalues(m);
    EXPECT_LE(oracle::matched_distance(ev, ref), 1e-8) << "trial " << trial;
  }
}

// Reconstruction and orthogonality on 1000 random matrices up to 12x12.
TEST(RealSchur, ReconstructionPropertyOnRandomMatrices) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 12);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng);
    const Mat m = random_matrix(rng, n, std::pow(10.0, logscale(rng)));
    const SchurForm s = real_schur(m);
    ASSERT_TRUE(is_quasi_triangular(s.T)) << "trial " << trial;
    EXPECT_LE((s.Q * s.T * s.Q.transpose() - m).norm(), 1e-9 * m.norm()) << trial;
    EXPECT_LE((s.Q.transpose() * s.Q - Mat::Identity(n, n)).norm(), 1e-10) << trial;
  }
}

TEST(RealSchur, TwoByTwoBlocksHoldComplexPairs) {
  Mat rot(2, 2);
  rot << 0.0, -2.0, 2.0, 0.0;
  const SchurForm s = real_schur(rot);
  ASSERT_NE(s.T(1, 0), 0.0);
  const auto ev = schur_eigenvalues(s.T);
  EXPECT_NEAR(std::abs(ev[0].imag()), 2.0, 1e-14);
  EXPECT_NEAR(ev[0].real(), 0.0, 1e-14);
}

TEST(ReorderSchur, MovesSelectedEigenvaluesFirst) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 11;
    const Mat m = random_matrix(rng, n);
    SchurForm s = real_schur(m);
    const auto before = schur_eigenvalues(s.T);
    const auto expected_count = std::count_if(before.begin(), before.end(),
                                              [](auto z) { return z.real() < 0.0; });
    const auto k = reorder_schur(s, [](const rlqt::Complex& z) { return z.real() < 0.0; });
    ASSERT_EQ(k, expected_count);
    ASSERT_TRUE(is_quasi_triangular(s.T));
    const auto after = schur_eigenvalues(s.T);
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_EQ(after[i].real() < 0.0, i < k) << "trial " << trial << " index " << i;
    }
    EXPECT_LE(oracle::matched_distance(before, after), 1e-9 * std::max(1.0, m.norm()));
    EXPECT_LE((s.Q * s.T * s.Q.transpose() - m).norm(), 1e-9 * m.norm());
    EXPECT_LE((s.Q.transpose() * s.Q - Mat::Identity(n, n)).norm(), 1e-10);
    // Leading columns span an invariant subspace.
    const Mat u = s.Q.leftCols(k);
    EXPECT_LE((m * u - u * s.T.topLeftCorner(k, k)).norm(), 1e-9 * m.norm());
  }
}

TEST(Balance, PreservesSpectrumAndEqualizesNorms) {
  Mat m(3, 3);
  m << 1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0;
  const Balanced b = balance(m);
  const Mat back = b.scale.asDiagonal() * b.matrix * b.scale.cwiseInverse().asDiagonal();
  EXPECT_LE((back - m).norm(), 1e-12 * m.norm());
  EXPECT_LT(b.matrix.norm(), m.norm());
  EXPECT_LE(oracle::matched_distance(eigenvalues(m), eigenvalues(b.matrix)), 1e-9);
}

}  // namespace
