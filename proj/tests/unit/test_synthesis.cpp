#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles/eigen_oracle.hpp"
#include "oracles/freq_oracle.hpp"
#include "rlqt/design.hpp"

namespace {

using rlqt::Complex;
using rlqt::Index;
using rlqt::Mat;
using rlqt::Vec;

Mat m1(double v) { return Mat::Constant(1, 1, v); }

rlqt::LinearPlant double_integrator() {
  rlqt::LinearPlant lp;
  lp.A = Mat(2, 2);
  lp.A << 0, 1, 0, 0;
  lp.B2 = Mat(2, 1);
  lp.B2 << 0, 1;
  lp.B1 = Mat::Identity(2, 2);
  lp.C2 = Mat(1, 2);
  lp.C2 << 1, 0;
  lp.D21 = Mat(1, 2);
  lp.D21 << 0, 1;
  lp.E = Mat::Identity(2, 2);
  return lp;
}

std::vector<Complex> sorted(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

// ---------------------------------------------------------------- LQT

TEST(DesignLqt, DoubleIntegratorClosedForm) {
  const auto lp = double_integrator();
  const auto d = rlqt::design_lqt(lp, Mat::Identity(2, 2), m1(1.0));
  EXPECT_NEAR(d.F(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(d.F(0, 1), -std::sqrt(3.0), 1e-12);
  // Substitute the closed-form P back into the CARE.
  Mat p(2, 2);
  p << std::sqrt(3.0), 1, 1, std::sqrt(3.0);
  EXPECT_LE(rlqt::linalg::care_residual(lp.A, lp.B2, Mat::Identity(2, 2), m1(1.0), p).norm(),
            1e-14);
}

TEST(DesignLqt, ZeroWeightOnStablePlantGivesZeroGain) {
  rlqt::LinearPlant lp = double_integrator();
  lp.A << -1, 1, 0, -2;
  const auto d = rlqt::design_lqt(lp, Mat::Zero(2, 2), m1(1.0));
  EXPECT_LE(d.P.norm(), 1e-14);
  EXPECT_LE(d.F.norm(), 1e-14);
}

TEST(DesignLqt, ZeroWeightOnPendulumIsRejected) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  EXPECT_THROW(rlqt::design_lqt(lp, m1(0.0), m1(2.0)), rlqt::RiccatiError);
}

TEST(DesignLqt, PendulumPolesMatchIndependentSolve) {
  // Reference spectrum from an independent Schur-based CARE solve (SciPy) of the
  // same plant and weights.
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto d = rlqt::design_lqt(lp, m1(225.0), m1(2.0));
  const auto poles = sorted(rlqt::linalg::eigenvalues(lp.A + lp.B2 * d.F));
  const std::vector<Complex> ref =
      sorted({{-18.62, 12.85}, {-18.62, -12.85}, {-10.74, 1.49}, {-10.74, -1.49}});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(poles[i] - ref[i]), 0.01) << i;
  EXPECT_NEAR(d.F(0, 0), 10.6066, 1e-3);
}

// ---------------------------------------------------------------- feed-forward

rlqt::LqtDesign pendulum_lqt(const rlqt::LinearPlant& lp) {
  return rlqt::design_lqt(lp, m1(225.0), m1(2.0));
}

TEST(Feedforward, ZeroReferenceGivesZeroProfile) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto ff = rlqt::solve_feedforward(pendulum_lqt(lp), lp, [](double) { return Vec::Zero(1); },
                                          1.0, 1e-3);
  EXPECT_EQ(ff.b.norm(), 0.0);
  EXPECT_EQ(ff.ur.norm(), 0.0);
  EXPECT_EQ(ff.steps, 1000);
}

TEST(Feedforward, TerminalConditionAndConstantSteadyState) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto lqt = pendulum_lqt(lp);
  const Vec r = Vec::Constant(1, 0.3);
  const auto ff = rlqt::solve_feedforward(lqt, lp, [&](double) { return r; }, 4.0, 1e-3);
  EXPECT_EQ(ff.b.col(ff.steps).norm(), 0.0);
  const Mat acl = lp.A + lp.B2 * lqt.F;
  const Vec steady = -acl.transpose().fullPivLu().solve(lp.E.transpose() * lqt.Q * r);
  EXPECT_LE((ff.b.col(ff.steps / 2) - steady).norm(), 1e-9 * steady.norm());
}

TEST(Feedforward, FourthOrderInStep) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto lqt = pendulum_lqt(lp);
  auto ref = [](double t) { return Vec::Constant(1, std::sin(std::numbers::pi * t)); };
  const double h = 0.01;
  const auto f1 = rlqt::solve_feedforward(lqt, lp, ref, 2.0, h);
  const auto f2 = rlqt::solve_feedforward(lqt, lp, ref, 2.0, h / 2);
  const auto f4 = rlqt::solve_feedforward(lqt, lp, ref, 2.0, h / 4);
  double d12 = 0.0, d24 = 0.0;
  for (Index k = 0; k <= f1.steps; ++k) {
    d12 = std::max(d12, std::abs(f1.ur(0, k) - f2.ur(0, 2 * k)));
    d24 = std::max(d24, std::abs(f2.ur(0, 2 * k) - f4.ur(0, 4 * k)));
  }
  EXPECT_GT(d12 / d24, 13.0);
  EXPECT_LT(d12 / d24, 19.0);
}

TEST(Feedforward, LinearInReference) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto lqt = pendulum_lqt(lp);
  auto r1 = [](double t) { return Vec::Constant(1, std::sin(3.0 * t)); };
  auto r2 = [](double t) { return Vec::Constant(1, t < 1.0 ? 0.2 : -0.5); };
  auto r12 = [&](double t) { return Vec(r1(t) + r2(t)); };
  const auto a = rlqt::solve_feedforward(lqt, lp, r1, 2.0, 1e-3);
  const auto b = rlqt::solve_feedforward(lqt, lp, r2, 2.0, 1e-3);
  const auto c = rlqt::solve_feedforward(lqt, lp, r12, 2.0, 1e-3);
  EXPECT_LE((c.ur - a.ur - b.ur).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Feedforward, HermiteMidpointsAreFourthOrder) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto lqt = pendulum_lqt(lp);
  auto ref = [](double t) { return Vec::Constant(1, std::sin(std::numbers::pi * t)); };
  const auto coarse = rlqt::solve_feedforward(lqt, lp, ref, 2.0, 2e-3);
  const auto fine = rlqt::solve_feedforward(lqt, lp, ref, 2.0, 1e-3);
  double err = 0.0, scale = 0.0;
  for (Index k = 0; k < coarse.steps; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * coarse.h;
    err = std::max(err, std::abs(coarse.ur_at(t)(0) - fine.ur(0, 2 * k + 1)));
    scale = std::max(scale, std::abs(fine.ur(0, 2 * k + 1)));
  }
  EXPECT_LE(err, 1e-6 * scale);
  EXPECT_THROW(rlqt::solve_feedforward(lqt, lp, ref, 1.0, 0.3), rlqt::DimensionError);
}

// ---------------------------------------------------------------- observer

TEST(Observer, StableScalarWithoutProcessNoise) {
  rlqt::LinearPlant lp;
  lp.A = m1(-1.0);
  lp.B2 = m1(1.0);
  lp.B1 = m1(1.0);
  lp.C2 = m1(1.0);
  lp.D21 = m1(0.0);
  lp.E = m1(1.0);
  const auto d = rlqt::design_observer(lp, m1(0.0), m1(1.0));
  EXPECT_LE(d.Y.norm(), 1e-14);
  EXPECT_LE(d.L.norm(), 1e-14);
}

TEST(Observer, DualCareOnPendulumIsHurwitz) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto d = rlqt::design_observer(lp, lp.B1 * lp.B1.transpose(), 1e-4 * Mat::Identity(2, 2));
  EXPECT_TRUE(rlqt::linalg::is_hurwitz(lp.A + d.L * lp.C2));
  EXPECT_EQ(d.method, "care");
}

TEST(Observer, PlacementHitsTargetSpectrum) {
  const auto lp = rlqt::pendulum_linearize(rlqt::PendulumParams{});
  const auto target = rlqt::default_pendulum_observer_poles();
  const auto d = rlqt::place_observer(lp, target);
  const auto got = oracle::eigenvalues(lp.A + d.L * lp.C2);
  EXPECT_LE(oracle::matched_distance(got, target), 1e-8 * std::abs(target[0]));
}

TEST(Observer, AckermannSingleOutput) {
  rlqt::LinearPlant lp;
  lp.A = Mat(3, 3);
  lp.A << 0, 1, 0, 0, 0, 1, 2, -1, 0.5;
  lp.B2 = Mat(3, 1);
  lp.B2 << 0, 0, 1;
  lp.B1 = Mat::Identity(3, 3);
  lp.C2 = Mat(1, 3);
  lp.C2 << 1, 0.5, 0;
  lp.D21 = Mat::Zero(1, 3);
  lp.E = lp.C2;
  const std::vector<Complex> target{{-2.0, 1.0}, {-2.0, -1.0}, {-5.0, 0.0}};
  const auto d = rlqt::place_observer(lp, target);
  EXPECT_LE(oracle::matched_distance(oracle::eigenvalues(lp.A + d.L * lp.C2), target), 1e-9);
  EXPECT_THROW(rlqt::place_observer(lp, {{1.0, 0.0}, {-2.0, 0.0}, {-3.0, 0.0}}),
               rlqt::DimensionError);
}

// ---------------------------------------------------------------- augmented plant

struct PendulumFixture {
  rlqt::Design d = rlqt::run_design(rlqt::default_pendulum_design_spec());
};

const rlqt::Design& pendulum_design() {
  static const PendulumFixture f;
  return f.d;
}

TEST(AugmentedPlant, StructureAndSpectrum) {
  const auto& d = pendulum_design();
  const auto& g = d.augmented;
  const Index n = d.plant.n();
  EXPECT_EQ(g.A.bottomLeftCorner(n, n).norm(), 0.0);
  EXPECT_EQ(g.B2.bottomRows(n).norm(), 0.0);  // e does not see u_f
  EXPECT_EQ(g.C2.leftCols(n).norm(), 0.0);    // f does not see x
  std::vector<Complex> expected = rlqt::linalg::eigenvalues(d.plant.A + d.plant.B2 * d.lqt.F);
  const auto obs = rlqt::linalg::eigenvalues(d.plant.A + d.observer.L * d.plant.C2);
  expected.insert(expected.end(), obs.begin(), obs.end());
  EXPECT_LE(oracle::matched_distance(oracle::eigenvalues(g.A), expected), 1e-8);
}

TEST(AugmentedPlant, ResidualImpulseMatchesInterconnection) {
  const auto& d = pendulum_design();
  const auto& lp = d.plant;
  const auto& g = d.augmented;
  const Index n = lp.n();
  // Fig. 1 coded directly on (x, x̂): u = F x̂ (u_f = 0),
  // x̂' = A x̂ + B2 u + L (C2 x̂ − C2 x − D21 w), f = C2 x̂ − C2 x − D21 w.
  Mat a_int(2 * n, 2 * n);
  a_int << lp.A, lp.B2 * d.lqt.F, -d.observer.L * lp.C2,
      lp.A + lp.B2 * d.lqt.F + d.observer.L * lp.C2;
  Mat c_int(lp.p(), 2 * n);
  c_int << -lp.C2, lp.C2;
  for (Index j = 0; j < lp.nw(); ++j) {
    // An impulse in w_j kicks x by B1 e_j and x̂ by −L D21 e_j.
    Vec z0(2 * n);
    z0 << lp.B1.col(j), -d.observer.L * lp.D21.col(j);
    for (double t : {0.001, 0.01, 0.05, 0.2}) {
      const Vec f_int = c_int * (a_int * t).exp() * z0;
      const Vec f_aug = g.C2 * (g.A * t).exp() * g.B1.col(j);
      EXPECT_LE((f_int - f_aug).norm(), 1e-9 * std::max(1.0, f_int.norm())) << j << " " << t;
    }
  }
}

TEST(AugmentedPlant, NullResidualWithoutMismatch) {
  const auto& g = pendulum_design().augmented;
  const Index n = g.n() / 2;
  Vec x0 = Vec::Zero(2 * n);
  x0.head(n) << 0.1, -0.05, 0.3, 0.0;  // e(0) = 0, w = 0, u_f = 0
  for (double t : {0.01, 0.1, 1.0}) {
    EXPECT_EQ((g.C2 * (g.A * t).exp() * x0).norm(), 0.0);
  }
}

// ---------------------------------------------------------------- H∞ norm

TEST(HinfNorm, StaticGain) {
  rlqt::StateSpace ss{Mat::Zero(0, 0), Mat::Zero(0, 2), Mat::Zero(2, 0), Mat(2, 2)};
  ss.D << 3, 1, 0, 2;
  EXPECT_NEAR(rlqt::hinf_norm(ss), rlqt::linalg::norm2(ss.D), 1e-14);
}

TEST(HinfNorm, FirstOrderLag) {
  rlqt::StateSpace ss{m1(-1.0), m1(1.0), m1(1.0), m1(0.0)};
  EXPECT_NEAR(rlqt::hinf_norm(ss), 1.0, 1e-8);
}

TEST(HinfNorm, LightlyDampedResonance) {
  const double zeta = 0.01;
  rlqt::StateSpace ss;
  ss.A = Mat(2, 2);
  ss.A << 0, 1, -1, -2 * zeta;
  ss.B = Mat(2, 1);
  ss.B << 0, 1;
  ss.C = Mat(1, 2);
  ss.C << 1, 0;
  ss.D = m1(0.0);
  EXPECT_NEAR(rlqt::hinf_norm(ss), 1.0 / (2 * zeta * std::sqrt(1 - zeta * zeta)), 1e-6);
}

TEST(HinfNorm, RejectsUnstable) {
  rlqt::StateSpace ss{m1(0.5), m1(1.0), m1(1.0), m1(0.0)};
  EXPECT_THROW(rlqt::hinf_norm(ss), rlqt::NumericalError);
}

TEST(HinfNorm, MatchesFrequencySweep) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    rlqt::StateSpace ss{Mat(4, 4), Mat(4, 2), Mat(2, 4), Mat(2, 2)};
    for (Mat* m : {&ss.A, &ss.B, &ss.C, &ss.D}) {
      for (Index i = 0; i < m->size(); ++i) m->data()[i] = nd(rng);
    }
    ss.A -= (ss.A.eigenvalues().real().maxCoeff() + 0.2) * Mat::Identity(4, 4);
    const double ref = oracle::sweep_hinf_norm(ss.A, ss.B, ss.C, ss.D, 100000);
    EXPECT_NEAR(rlqt::hinf_norm(ss), ref, 1e-4 * ref) << trial;
  }
}

// ---------------------------------------------------------------- H∞ synthesis

// Scalar integrator with independent disturbance and noise channels:
//   ẋ = w1 + u,  z = (x, u),  y = x + w2.
// Both Riccati equations reduce to (1 − γ⁻²)X² = 1, so X = Y = (1 − γ⁻²)^{-1/2},
// and ρ(XY) < γ² becomes γ² > 2: γ_opt = √2.
rlqt::GeneralizedPlant scalar_plant() {
  rlqt::GeneralizedPlant g;
  g.A = m1(0.0);
  g.B1 = Mat(1, 2);
  g.B1 << 1, 0;
  g.B2 = m1(1.0);
  g.C1 = Mat(2, 1);
  g.C1 << 1, 0;
  g.D11 = Mat::Zero(2, 2);
  g.D12 = Mat(2, 1);
  g.D12 << 0, 1;
  g.C2 = m1(1.0);
  g.D21 = Mat(1, 2);
  g.D21 << 0, 1;
  g.D22 = m1(0.0);
  return g;
}

TEST(HinfSynthesis, ScalarOptimumMatchesClosedForm) {
  const double g_opt = rlqt::optimal_gamma(scalar_plant(), 0.1, 100.0, 1e-7);
  EXPECT_NEAR(g_opt, std::sqrt(2.0), 1e-4);
}

TEST(HinfSynthesis, ScalarFilterMeetsItsLevel) {
  rlqt::HinfOptions opt;
  opt.require_stable_filter = false;
  const auto q = rlqt::synthesize_qfilter(scalar_plant(), 1.6, opt);
  EXPECT_LT(q.achieved, 1.6);
  EXPECT_EQ(q.regularization, 0.0);
  EXPECT_THROW(rlqt::synthesize_qfilter(scalar_plant(), 1.3, opt), rlqt::SynthesisError);
}

TEST(HinfSynthesis, RegularizesRankDeficientMeasurementChannel) {
  auto g = scalar_plant();
  g.D21.setZero();
  rlqt::HinfOptions opt;
  opt.require_stable_filter = false;
  const auto q = rlqt::synthesize_qfilter(g, 10.0, opt);
  EXPECT_EQ(q.regularization, 1e-6);
  EXPECT_LT(q.achieved, 10.0);
}

TEST(HinfSynthesis, PendulumDefaultLevel) {
  const auto& d = pendulum_design();
  EXPECT_TRUE(rlqt::linalg::is_hurwitz(d.filter.A_q));
  EXPECT_LT(d.filter.achieved, 0.5);
  EXPECT_LT(d.filter.rho, 0.25);
  EXPECT_EQ(d.filter.nq(), 8);
}

TEST(HinfSynthesis, LargeGammaIsFeasible) {
  const auto& g = pendulum_design().augmented;
  EXPECT_NO_THROW(rlqt::synthesize_qfilter(g, 1e4));
}

TEST(HinfSynthesis, PendulumOptimumAndInfeasibleTarget) {
  const auto& g = pendulum_design().augmented;
  // Reference optimum from an independent SciPy implementation of the same test.
  EXPECT_NEAR(rlqt::optimal_gamma(g, 0.05, 10.0, 1e-6), 0.42969, 1e-3);
  try {
    rlqt::synthesize_qfilter(g, 0.21);
    FAIL() << "γ = 0.21 should be infeasible";
  } catch (const rlqt::SynthesisError& e) {
    EXPECT_FALSE(e.stage().empty());
  }
}

TEST(RunDesign, NamesFailingStage) {
  auto spec = rlqt::default_pendulum_design_spec();
  spec.Q = m1(0.0);
  try {
    rlqt::run_design(spec);
    FAIL();
  } catch (const rlqt::SynthesisError& e) {
    EXPECT_EQ(e.stage(), "lqt");
  }
}

}  // namespace
