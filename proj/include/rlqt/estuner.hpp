#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "rlqt/sim.hpp"

namespace rlqt {

/// Iteration-domain extremum seeking on a scalar parameter.
struct EsParams {
  double a = 0.8;       // ω = aπ
  double h = 0.1;       // high-pass pole
  double beta = 0.015;  // dither amplitude
  double delta = 1.0;   // step size
  int k_max = 100;
  double alpha0 = 1.0;
  double zeta0 = 0.0;   // initial high-pass state

  double omega() const { return a * std::numbers::pi; }

  void validate() const {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("es: a must lie in (0, 1)");
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("es: h must lie in (0, 1)");
    if (!(beta > 0.0)) throw ConfigError("es: beta must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("es: delta must be positive");
    if (k_max < 1) throw ConfigError("es: k_max must be at least 1");
    if (!std::isfinite(alpha0) || !std::isfinite(zeta0)) {
      throw ConfigError("es: alpha0 and zeta0 must be finite");
    }
  }
};

/// One row of the tuning history: state at iteration k and the cost measured there.
struct EsRecord {
  int k = 0;
  double alpha = 0.0;
  double alpha_hat = 0.0;
  double zeta = 0.0;
  double J = 0.0;
  bool diverged = false;
};

struct EsState {
  int k = 0;
  double zeta = 0.0;
  double alpha_hat = 0.0;
  double alpha = 0.0;  // α̂ + β cos(ωk)
  std::vector<EsRecord> history;

  static EsState initial(const EsParams& p) {
    EsState s;
    s.zeta = p.zeta0;
    s.alpha_hat = p.alpha0;
    s.alpha = p.alpha0 + p.beta;  // cos(0) = 1
    return s;
  }
};

/// Applies
///   ζ(k+1) = −hζ(k) + J
///   α̂(k+1) = α̂(k) − δβcos(ωk)[J − (1+h)ζ(k)]
///   α(k+1) = α̂(k+1) + βcos(ω(k+1))
/// and appends (k, α(k), α̂(k), ζ(k), J) to the history.
inline void es_step(EsState& st, const EsParams& p, double J, bool diverged = false) {
  if (!std::isfinite(J) || J < 0.0) {
    throw NumericalError("es_step: cost must be finite and non-negative, got " +
                         std::to_string(J));
  }
  const double w = p.omega();
  const double c = std::cos(w * st.k);
  st.history.push_back({st.k, st.alpha, st.alpha_hat, st.zeta, J, diverged});
  const double zeta_next = -p.h * st.zeta + J;
  st.alpha_hat = st.alpha_hat - p.delta * p.beta * c * (J - (1.0 + p.h) * st.zeta);
  st.zeta = zeta_next;
  ++st.k;
  st.alpha = st.alpha_hat + p.beta * std::cos(w * st.k);
}

/// Cost of one experiment at α.
struct CostSample {
  double J = 0.0;
  bool diverged = false;
};
using CostFn = std::function<CostSample(double)>;

/// How the pre-scan turns probe costs into δ.
enum class DeltaRule {
  normalized,  // δ = 0.5 / max|J|
  curvature,   // δ from a quadratic fit, see prescan()
};

struct Prescan {
  std::vector<double> alphas;
  std::vector<CostSample> costs;
  double curvature = 0.0;  // J'' of the quadratic fit (0 if unavailable)
  double delta = 0.0;
  double zeta0 = 0.0;      // J(α0)/(1+h), the high-pass fixed point
  DeltaRule rule = DeltaRule::curvature;
  bool fell_back = false;  // curvature rule unusable, normalized rule applied
};

/// Real part of the high-pass (z − 1)/(z + h) at the dither frequency.
inline double highpass_gain(const EsParams& p) {
  const std::complex<double> z = std::polar(1.0, p.omega());
  return ((z - 1.0) / (z + p.h)).real();
}

/// Probes J at α0 + span·{−1, −½, 0, ½, 1}.
///
/// Under the curvature rule, the averaged recursion near the minimum contracts
/// α̂ − α* by δβ²J''·Re H/2 per iteration (H the high-pass seen by the
/// demodulator); δ is chosen so that this equals `contraction`.
inline Prescan prescan(const CostFn& cost, const EsParams& p, DeltaRule rule,
                       double contraction = 0.1, double span = 1.0) {
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw ConfigError("prescan: contraction must lie in (0, 1)");
  }
  if (!(span > 0.0)) throw ConfigError("prescan: span must be positive");
  Prescan ps;
  ps.rule = rule;
  for (double off : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    ps.alphas.push_back(p.alpha0 + span * off);
    ps.costs.push_back(cost(ps.alphas.back()));
  }
  const CostSample& centre = ps.costs[2];
  if (centre.diverged) throw DivergenceError("prescan: run at alpha0 diverged");
  ps.zeta0 = centre.J / (1.0 + p.h);

  double jmax = 0.0;
  Mat v(0, 3);
  Vec rhs(0);
  for (std::size_t i = 0; i < ps.costs.size(); ++i) {
    if (ps.costs[i].diverged) continue;
    jmax = std::max(jmax, std::abs(ps.costs[i].J));
    const double x = ps.alphas[i] - p.alpha0;
    v.conservativeResize(v.rows() + 1, Eigen::NoChange);
    v.row(v.rows() - 1) << 1.0, x, x * x;
    rhs.conservativeResize(rhs.size() + 1);
    rhs(rhs.size() - 1) = ps.costs[i].J;
  }
  if (!(jmax > 0.0)) throw DivergenceError("prescan: no usable cost sample");
  const double normalized = 0.5 / jmax;

  if (rule == DeltaRule::normalized) {
    ps.delta = normalized;
    return ps;
  }
  if (v.rows() >= 3) {
    const Vec c = v.colPivHouseholderQr().solve(rhs);
    ps.curvature = 2.0 * c(2);
  }
  const double gain = highpass_gain(p);
  if (ps.curvature > 0.0 && gain > 0.0) {
    ps.delta = 2.0 * contraction / (p.beta * p.beta * ps.curvature * gain);
  } else {
    ps.delta = normalized;
    ps.fell_back = true;
  }
  return ps;
}

struct TuneResult {
  double alpha_star = 0.0;  // final α̂
  std::vector<EsRecord> history;
  double best_alpha = 0.0;  // probed α with the lowest cost
  double best_J = 0.0;
  int diverged_runs = 0;
};

/// Lowest cost seen up to and including each iteration.
inline std::vector<double> best_so_far(const std::vector<EsRecord>& history) {
  std::vector<double> out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : history) {
    best = std::min(best, r.J);
    out.push_back(best);
  }
  return out;
}

/// Runs k_max iterations of the recursion against `cost`.
///
/// A diverged run enters the recursion as twice the largest finite cost seen so
/// far, so that one bad probe pushes α̂ away without destroying the state.
inline TuneResult tune(const CostFn& cost, const EsParams& p) {
  p.validate();
  EsState st = EsState::initial(p);
  TuneResult res;
  double worst_finite = 0.0;
  bool any_finite = false;
  for (int k = 0; k < p.k_max; ++k) {
    const CostSample s = cost(st.alpha);
    double fed = s.J;
    if (s.diverged || !std::isfinite(s.J)) {
      ++res.diverged_runs;
      if (!any_finite) {
        throw DivergenceError("tune: run at alpha = " + std::to_string(st.alpha) +
                              " diverged before any finite cost was measured");
      }
      fed = 2.0 * worst_finite;
    } else {
      any_finite = true;
      worst_finite = std::max(worst_finite, s.J);
    }
    es_step(st, p, fed, s.diverged);
  }
  res.alpha_star = st.alpha_hat;
  res.history = std::move(st.history);
  const auto best = std::min_element(res.history.begin(), res.history.end(),
                                     [](const EsRecord& x, const EsRecord& y) {
                                       return (x.diverged ? 1 : 0) < (y.diverged ? 1 : 0) ||
                                              (x.diverged == y.diverged && x.J < y.J);
                                     });
  res.best_alpha = best->alpha;
  res.best_J = best->J;
  return res;
}

/// Cost function backed by the closed-loop simulator; inputs are prepared once
/// and replayed every call (repeatable disturbance and noise).
inline CostFn simulation_cost(const Scenario& sc, const Design& d) {
  auto in = std::make_shared<const RunInputs>(prepare_inputs(sc, scenario_feedforward(sc, d)));
  return [sc, &d, in](double alpha) {
    RunOptions opt;
    opt.record = false;
    const RunTrace tr = simulate_run(sc, d.controller(alpha), *in, opt);
    return CostSample{tr.J, tr.diverged};
  };
}

inline void write_history_csv(std::ostream& os, const std::vector<EsRecord>& history) {
  os << std::setprecision(17) << "k,alpha,alpha_hat,zeta,J\n";
  for (const auto& r : history) {
    os << r.k << ',' << r.alpha << ',' << r.alpha_hat << ',' << r.zeta << ',' << r.J << '\n';
  }
}

}  // namespace rlqt
