#include <gtest/gtest.h>

#include <random>

#include "oracles/riccati_oracle.hpp"
#include "rlqt/linalg.hpp"

namespace {

using rlqt::Mat;
using rlqt::linalg::solve_lyapunov;

TEST(SolveLyapunov, Scalar) {
  EXPECT_NEAR(solve_lyapunov(Mat::Constant(1, 1, -1.0), Mat::Constant(1, 1, 2.0))(0, 0), 1.0,
              1e-15);
}

TEST(SolveLyapunov, NegativeIdentity) {
  const Mat x = solve_lyapunov(-Mat::Identity(2, 2), Mat::Identity(2, 2));
  EXPECT_LE((x - 0.5 * Mat::Identity(2, 2)).norm(), 1e-15);
}

TEST(SolveLyapunov, RejectsNonHurwitz) {
  Mat a(2, 2);
  a << -1, 0, 0, 0.5;
  EXPECT_THROW(solve_lyapunov(a, Mat::Identity(2, 2)), rlqt::NumericalError);
  EXPECT_THROW(solve_lyapunov(Mat::Zero(2, 2), Mat::Identity(2, 2)), rlqt::NumericalError);
}

TEST(SolveLyapunov, MatchesKroneckerOracle) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5;
    Mat a(n, n), c(n, n);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (int i = 0; i < c.size(); ++i) c.data()[i] = nd(rng);
    // Shift to make A Hurwitz; complex pairs survive the shift.
    a -= (a.eigenvalues().real().maxCoeff() + 0.5) * Mat::Identity(n, n);
    const Mat w = c + c.transpose();
    const Mat x = solve_lyapunov(a, w);
    const Mat ref = oracle::kronecker_lyapunov(a, w);
    EXPECT_LE((x - ref).norm(), 1e-10 * (1.0 + x.norm())) << trial;
    EXPECT_LE((a.transpose() * x + x * a + w).norm(), 1e-10 * (1.0 + x.norm())) << trial;
    EXPECT_EQ((x - x.transpose()).norm(), 0.0);
  }
}

}  // namespace
