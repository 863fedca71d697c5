#pragma once

// Dense frequency sweep for the L∞ norm, evaluated through a modal
// decomposition so that 10⁶ points stay cheap; the best grid point is refined
// by golden-section search on its two neighbouring cells.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace oracle {

struct ModalSystem {
  Eigen::VectorXcd poles;
  Eigen::MatrixXcd c_modal;  // C V
  Eigen::MatrixXcd b_modal;  // V⁻¹ B
  Eigen::MatrixXd d;

  explicit ModalSystem(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::MatrixXd& c, const Eigen::MatrixXd& dd)
      : d(dd) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    poles = es.eigenvalues();
    const Eigen::MatrixXcd v = es.eigenvectors();
    c_modal = c.cast<std::complex<double>>() * v;
    b_modal = v.partialPivLu().solve(b.cast<std::complex<double>>());
  }

  double sigma(double w) const {
    Eigen::MatrixXcd g = d.cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
      const std::complex<double> k = 1.0 / (std::complex<double>(0.0, w) - poles(i));
      g += k * c_modal.col(i) * b_modal.row(i);
    }
    if (g.rows() == 1 || g.cols() == 1) return g.norm();
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(g).singularValues()(0);
  }
};

/// max over ω ∈ {0} ∪ logspace(lo_exp, hi_exp, points) of σmax(G(jω)), refined locally.
inline double sweep_hinf_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const Eigen::MatrixXd& c, const Eigen::MatrixXd& d,
                              int points = 1000000, double lo_exp = -4.0, double hi_exp = 4.0) {
  const ModalSystem sys(a, b, c, d);
  double best = sys.sigma(0.0);
  int best_i = -1;
  const double step = (hi_exp - lo_exp) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double s = sys.sigma(std::pow(10.0, lo_exp + step * i));
    if (s > best) {
      best = s;
      best_i = i;
    }
  }
  if (best_i < 0) return best;
  // Golden-section search on log ω between the neighbouring grid points.
  double x0 = lo_exp + step * (best_i - 1), x3 = lo_exp + step * (best_i + 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double x) { return sys.sigma(std::pow(10.0, x)); };
  double x1 = x3 - gr * (x3 - x0), x2 = x0 + gr * (x3 - x0);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 > f2) {
      x3 = x2;
      x2 = x1;
      f2 = f1;
      x1 = x3 - gr * (x3 - x0);
      f1 = f(x1);
    } else {
      x0 = x1;
      x1 = x2;
      f1 = f2;
      x2 = x0 + gr * (x3 - x0);
      f2 = f(x2);
    }
  }
  return std::max({best, f1, f2});
}

}  // namespace oracle
