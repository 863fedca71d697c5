#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "rlqt/linalg.hpp"
#include "rlqt/plant.hpp"

namespace rlqt {

/// Output-injection gain: x̂' = A x̂ + B2 u + L (C2 x̂ − y), so the error
/// e = x − x̂ obeys ė = (A + L C2) e.
struct ObserverDesign {
  Mat L;
  Mat Y;               // dual CARE solution, empty for pole placement
  std::string method;  // "care" or "place"
};

/// Kalman-like gain from the dual CARE  A Y + Y Aᵀ − Y C2ᵀ V⁻¹ C2 Y + W = 0.
inline ObserverDesign design_observer(const LinearPlant& lp, const Mat& w_proc,
                                      const Mat& w_meas) {
  linalg::require_shape(w_proc, lp.n(), lp.n(), "design_observer: W_proc");
  linalg::require_shape(w_meas, lp.p(), lp.p(), "design_observer: W_meas");
  ObserverDesign d;
  d.method = "care";
  d.Y = linalg::solve_care(lp.A.transpose(), lp.C2.transpose(), w_proc, w_meas);
  d.L = -d.Y * lp.C2.transpose() * w_meas.llt().solve(Mat::Identity(lp.p(), lp.p()));
  if (!linalg::is_hurwitz(lp.A + d.L * lp.C2)) {
    throw RiccatiError("design_observer: A + L C2 is not Hurwitz");
  }
  return d;
}

namespace detail {

// Real coefficients (c, d) of (s − λ)(s − μ) for a conjugate or real pair.
inline std::pair<double, double> quadratic_from_pair(Complex lambda, Complex mu) {
  if (std::abs(lambda.imag() + mu.imag()) > 1e-12 * std::max(1.0, std::abs(lambda))) {
    throw DimensionError("place_observer: poles must come in conjugate pairs");
  }
  return {-(lambda + mu).real(), (lambda * mu).real()};
}

// Single-output placement by Ackermann's formula on the dual pair (Aᵀ, C2ᵀ).
inline Mat ackermann_observer(const Mat& a, const Mat& c, const std::vector<Complex>& poles) {
  const Index n = a.rows();
  // Characteristic polynomial coefficients of the desired spectrum.
  std::vector<Complex> coeff{1.0};
  for (const Complex& p : poles) {
    std::vector<Complex> next(coeff.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      next[i] += coeff[i];
      next[i + 1] -= coeff[i] * p;
    }
    coeff = std::move(next);
  }
  // φ(A) = Aⁿ + c1 Aⁿ⁻¹ + … + cn I by Horner.
  Mat phi = Mat::Identity(n, n);
  for (std::size_t i = 1; i < coeff.size(); ++i) {
    phi = phi * a + coeff[i].real() * Mat::Identity(n, n);
  }
  Mat obs(n, n);
  Mat row = c;
  for (Index i = 0; i < n; ++i) {
    obs.row(i) = row;
    row = row * a;
  }
  Eigen::FullPivLU<Mat> lu(obs);
  if (!lu.isInvertible()) throw DimensionError("place_observer: (C2, A) is not observable");
  Vec en = Vec::Zero(n);
  en(n - 1) = 1.0;
  // Gain for ė = (A − K C) e is φ(A) O⁻¹ eₙ; here L = −K.
  return -(phi * lu.solve(en));
}

}  // namespace detail

/// Exact placement of eig(A + L C2).
///
/// Single-output plants use Ackermann's formula. Plants with C2 = [I_p 0],
/// n = 2p and A = [0 I; A21 A22] (position/velocity states) are placed channel
/// by channel: consecutive pole pairs (2i, 2i+1) become the error polynomial
/// s² + c_i s + d_i of measured coordinate i.
inline ObserverDesign place_observer(const LinearPlant& lp, const std::vector<Complex>& poles) {
  const Index n = lp.n(), p = lp.p();
  if (static_cast<Index>(poles.size()) != n) {
    throw DimensionError("place_observer: expected " + std::to_string(n) + " poles");
  }
  for (const Complex& z : poles) {
    if (!(z.real() < 0.0)) throw DimensionError("place_observer: poles must be stable");
  }
  ObserverDesign d;
  d.method = "place";
  if (p == 1) {
    d.L = detail::ackermann_observer(lp.A, lp.C2, poles);
  } else {
    const bool structured =
        n == 2 * p && lp.C2.leftCols(p).isIdentity(0.0) && lp.C2.rightCols(p).isZero(0.0) &&
        lp.A.topLeftCorner(p, p).isZero(0.0) && lp.A.topRightCorner(p, p).isIdentity(0.0);
    if (!structured) {
      throw DimensionError(
          "place_observer: multi-output placement needs C2 = [I 0] and A = [0 I; A21 A22]");
    }
    Vec c(p), dd(p);
    for (Index i = 0; i < p; ++i) {
      const auto [ci, di] = detail::quadratic_from_pair(poles[2 * i], poles[2 * i + 1]);
      c(i) = ci;
      dd(i) = di;
    }
    // ė1 = L1 e1 + e2, ė2 = (A21 + L2) e1 + A22 e2. With L1 = −diag(c) − A22 and
    // A21 + L2 = A22 L1 − diag(d) the polynomial matrix becomes diagonal.
    const Mat a21 = lp.A.bottomLeftCorner(p, p), a22 = lp.A.bottomRightCorner(p, p);
    const Mat l1 = -Mat(c.asDiagonal()) - a22;
    const Mat l2 = a22 * l1 - Mat(dd.asDiagonal()) - a21;
    d.L.resize(n, p);
    d.L << l1, l2;
  }
  linalg::require_finite(d.L, "place_observer: L");
  if (!linalg::is_hurwitz(lp.A + d.L * lp.C2)) {
    throw NumericalError("place_observer: placed spectrum is not Hurwitz");
  }
  return d;
}

}  // namespace rlqt
