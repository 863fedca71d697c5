#include <gtest/gtest.h>

#include <random>

#include "oracles/eigen_oracle.hpp"
#include "oracles/riccati_oracle.hpp"
#include "rlqt/linalg.hpp"

namespace {

using rlqt::Mat;
using namespace rlqt::linalg;

Mat m1(double v) { return Mat::Constant(1, 1, v); }

TEST(SolveCare, ScalarIntegrator) {
  const Mat p = solve_care(m1(0.0), m1(1.0), m1(1.0), m1(1.0));
  EXPECT_NEAR(p(0, 0), 1.0, 1e-12);
}

TEST(SolveCare, ScalarUnstableZeroWeightPicksStabilizingRoot) {
  // 2P − P² = 0 has roots 0 and 2; only P = 2 stabilizes.
  const Mat p = solve_care(m1(1.0), m1(1.0), m1(0.0), m1(1.0));
  EXPECT_NEAR(p(0, 0), 2.0, 1e-12);
}

TEST(SolveCare, DoubleIntegratorClosedForm) {
  Mat a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  const Mat p = solve_care(a, b, Mat::Identity(2, 2), m1(1.0));
  Mat expected(2, 2);
  expected << std::sqrt(3.0), 1.0, 1.0, std::sqrt(3.0);
  EXPECT_LE((p - expected).norm(), 1e-12);
}

TEST(SolveCare, Errors) {
  EXPECT_THROW(solve_care(m1(1.0), m1(1.0), m1(1.0), m1(0.0)), rlqt::RiccatiError);
  // (A, B) not stabilizable.
  EXPECT_THROW(solve_care(m1(1.0), m1(0.0), m1(1.0), m1(1.0)), rlqt::RiccatiError);
  // Unobservable mode on the imaginary axis.
  EXPECT_THROW(solve_care(m1(0.0), m1(1.0), m1(0.0), m1(1.0)), rlqt::RiccatiError);
  EXPECT_THROW(solve_care(Mat::Zero(2, 2), Mat::Zero(3, 1), Mat::Zero(2, 2), m1(1.0)),
               rlqt::DimensionError);
}

struct RandomCare {
  Mat a, b, q, r;
};

RandomCare random_care(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> nd;
  RandomCare s{Mat(n, n), Mat(n, m), Mat(), Mat()};
  for (int i = 0; i < s.a.size(); ++i) s.a.data()[i] = nd(rng);
  for (int i = 0; i < s.b.size(); ++i) s.b.data()[i] = nd(rng);
  Mat c(n, n), d(m, m);
  for (int i = 0; i < c.size(); ++i) c.data()[i] = nd(rng);
  for (int i = 0; i < d.size(); ++i) d.data()[i] = nd(rng);
  s.q = c.transpose() * c / n + 0.1 * Mat::Identity(n, n);
  s.r = d.transpose() * d + Mat::Identity(m, m);
  return s;
}

TEST(SolveCare, MatchesKleinmanOracleOnRandomSystems) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 8;
    const int m = 1 + trial % 3;
    const auto s = random_care(rng, n, m);
    const Mat p = solve_care(s.a, s.b, s.q, s.r);
    const double scale = 1.0 + p.norm();
    EXPECT_LE(care_residual(s.a, s.b, s.q, s.r, p).norm(), 1e-8 * scale) << trial;
    EXPECT_LE((p - p.transpose()).norm(), 1e-10 * p.norm()) << trial;
    EXPECT_GE(min_symmetric_eigenvalue(p), -1e-9 * p.norm()) << trial;
    const Mat acl = s.a - s.b * s.r.llt().solve(s.b.transpose() * p);
    EXPECT_TRUE(is_hurwitz(acl)) << trial;

    const Mat k0 = oracle::stabilizing_gain(s.a, s.b);
    ASSERT_LT((s.a - s.b * k0).eigenvalues().real().maxCoeff(), 0.0) << trial;
    const Mat pk = oracle::kleinman_care(s.a, s.b, s.q, s.r, k0);
    EXPECT_LE((p - pk).norm(), 1e-8 * scale) << trial;
  }
}

TEST(SolveCare, BalancingHandlesMixedScales) {
  // Units spread over several orders of magnitude, as in the pendulum plant.
  Mat a(4, 4), b(4, 1);
  a << 0, 0, 1, 0, 0, 0, 0, 1, 0, 149.27, -7.06, -0.98, 0, 261.6, -6.98, -1.72;
  b << 0, 0, 49.7, 49.1;
  Mat q = Mat::Zero(4, 4);
  q(0, 0) = 225.0;
  const Mat p = solve_care(a, b, q, m1(2.0));
  EXPECT_LE(care_residual(a, b, q, m1(2.0), p).norm(), 1e-8 * (1.0 + p.norm()));
  const Mat pn = solve_riccati_stabilizing(a, b * b.transpose() / 2.0, q, false);
  EXPECT_LE((p - pn).norm(), 1e-8 * (1.0 + p.norm()));
}

TEST(RiccatiStabilizing, IndefiniteQuadraticTerm) {
  // H∞-type equation: AᵀX + XA − X(B2B2ᵀ − γ⁻²B1B1ᵀ)X + CᵀC = 0.
  Mat a = m1(-1.0), g = m1(1.0 - 0.25), q = m1(1.0);
  const Mat x = solve_riccati_stabilizing(a, g, q);
  // Scalar: −2x − 0.75x² + 1 = 0, stabilizing root has −1 − 0.75x < 0.
  const double expected = (-2.0 + std::sqrt(4.0 + 3.0)) / 1.5;
  EXPECT_NEAR(x(0, 0), expected, 1e-12);
}

}  // namespace
