#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "rlqt/controller.hpp"
#include "rlqt/design.hpp"
#include "rlqt/plant.hpp"
#include "rlqt/signal.hpp"
#include "rlqt/synthesis/lqt.hpp"

namespace rlqt {

/// Cost assigned to a diverged run.
inline constexpr double kDivergedCost = 1e12;

/// One closed-loop experiment on [0, T].
struct Scenario {
  enum class Injection { input, state };

  std::string name;
  NonlinearPlant plant;
  Mat E;  // tracked output ỹ = E x
  std::vector<std::string> state_names;

  Signal reference;  // same value on every tracked channel
  Signal disturbance;
  Injection injection = Injection::input;
  Vec disturbance_direction;  // state injection: w = direction · d(t)

  double noise_std = 1e-3;  // per measured channel
  std::uint64_t noise_seed = 1;

  double T = 20.0;
  double h = 1e-4;
  Vec x0;
  Mat Q, R;
  double divergence_bound = 1e6;  // |x|∞ beyond this counts as divergence

  Index steps() const { return static_cast<Index>(std::llround(T / h)); }

  void validate() const {
    if (!(T > 0.0) || !(h > 0.0)) throw ConfigError("scenario: T and h must be positive");
    const double ratio = T / h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      throw ConfigError("scenario: T must be an integer multiple of h");
    }
    if (!plant.f || !plant.g) throw ConfigError("scenario: plant model missing");
    if (E.cols() != plant.n) throw ConfigError("scenario: E has wrong column count");
    if (x0.size() != plant.n) throw ConfigError("scenario: x0 has wrong size");
    if (Q.rows() != E.rows() || Q.cols() != E.rows()) throw ConfigError("scenario: Q shape");
    if (R.rows() != plant.m || R.cols() != plant.m) throw ConfigError("scenario: R shape");
    if (injection == Injection::state && disturbance_direction.size() != plant.nw) {
      throw ConfigError("scenario: disturbance direction must match the plant's w size");
    }
    if (!(noise_std >= 0.0)) throw ConfigError("scenario: noise std must be non-negative");
  }

  Vec reference_at(double t) const { return Vec::Constant(E.rows(), reference(t)); }
};

/// α-independent samples of a scenario, shared by every run: reference,
/// feed-forward and disturbance on the half-step grid (RK4 stage times),
/// measurement noise per step.
struct RunInputs {
  Index steps = 0;
  double h = 0.0;
  Mat ref;    // p1 x (2N+1)
  Mat ur;     // m x (2N+1)
  Vec dist;   // 2N+1
  Mat noise;  // p x (N+1)
};

inline RunInputs prepare_inputs(const Scenario& sc, const FeedforwardProfile& ff) {
  sc.validate();
  RunInputs in;
  in.steps = sc.steps();
  in.h = sc.h;
  if (ff.steps != in.steps || std::abs(ff.h - sc.h) > 1e-15 * sc.h) {
    throw DimensionError("simulate_run: feed-forward grid does not match the scenario");
  }
  const Index half = 2 * in.steps + 1;
  in.ref.resize(sc.E.rows(), half);
  in.ur.resize(sc.plant.m, half);
  in.dist.resize(half);
  for (Index i = 0; i < half; ++i) {
    const double t = 0.5 * sc.h * static_cast<double>(i);
    in.ref.col(i).setConstant(sc.reference(t));
    in.ur.col(i) = (i % 2 == 0) ? Vec(ff.ur.col(i / 2)) : ff.ur_at(t);
    in.dist(i) = sc.disturbance(t);
  }
  in.noise.resize(sc.plant.p, in.steps + 1);
  std::mt19937_64 gen(sc.noise_seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Index k = 0; k <= in.steps; ++k) {
    for (Index i = 0; i < sc.plant.p; ++i) in.noise(i, k) = sc.noise_std * nd(gen);
  }
  return in;
}

/// Recorded signals on the (possibly decimated) grid.
struct RunTrace {
  std::vector<double> t;
  Mat x, x_hat, x_q, u, u_r, u_f, y, y_tilde, r;
  double J = 0.0;
  bool diverged = false;
  Index steps_completed = 0;
  std::string diagnostic;
};

struct RunOptions {
  bool record = true;
  Index decimate = 1;
};

/// Co-integrates the plant and the controller with one shared RK4 step.
///
/// u = F_c x_c + u_r is re-evaluated at every stage; measurement noise is held
/// over each step. The cost uses the commanded u (without any input
/// disturbance) and the trapezoid rule on the full grid.
inline RunTrace simulate_run(const Scenario& sc, TrackingController ctrl, const RunInputs& in,
                             const RunOptions& opt = {}) {
  const NonlinearPlant& pl = sc.plant;
  const Index n = pl.n, nc = ctrl.A_c.rows(), m = pl.m, p = pl.p, p1 = sc.E.rows();
  const Index N = in.steps;
  const double h = in.h;
  if (ctrl.B_c.cols() != p || ctrl.F_c.rows() != m) {
    throw DimensionError("simulate_run: controller does not match the plant");
  }
  if (opt.decimate < 1) throw ConfigError("simulate_run: decimation must be >= 1");
  const bool state_inj = sc.injection == Scenario::Injection::state;
  const Mat& q = sc.Q;
  const Mat& r_w = sc.R;

  RunTrace tr;
  const Index rows = opt.record ? N / opt.decimate + 1 + (N % opt.decimate ? 1 : 0) : 0;
  if (opt.record) {
    tr.t.reserve(static_cast<std::size_t>(rows));
    for (Mat* mat : {&tr.x, &tr.x_hat}) mat->resize(n, rows);
    tr.x_q.resize(ctrl.nq, rows);
    for (Mat* mat : {&tr.u, &tr.u_r, &tr.u_f}) mat->resize(m, rows);
    tr.y.resize(p, rows);
    tr.y_tilde.resize(p1, rows);
    tr.r.resize(p1, rows);
  }

  Vec x = sc.x0, xc = Vec::Zero(nc);
  Vec xs(n), xcs(nc), kx[4] = {Vec(n), Vec(n), Vec(n), Vec(n)};
  Vec kc[4] = {Vec(nc), Vec(nc), Vec(nc), Vec(nc)};
  Vec u(m), uin(m), y(p), w = Vec::Zero(pl.nw), e(p1), uf(m);
  const Vec w_zero = Vec::Zero(pl.nw);

  // Stage derivative at half-grid index idx, using the noise sample of step k.
  auto deriv = [&](Index idx, Index k, const Vec& xa, const Vec& xca, Vec& dx, Vec& dxc) {
    u.noalias() = ctrl.F_c * xca;
    u += in.ur.col(idx);
    if (state_inj) {
      w = sc.disturbance_direction * in.dist(idx);
      uin = u;
    } else {
      uin = u.array() + in.dist(idx);
    }
    pl.g(xa, state_inj ? w : w_zero, y);
    y += in.noise.col(k);
    pl.f(xa, uin, state_inj ? w : w_zero, dx);
    dxc.noalias() = ctrl.A_c * xca;
    dxc.noalias() += ctrl.B_c * y;
    dxc.noalias() += ctrl.B_r * in.ur.col(idx);
  };

  double acc = 0.0;
  Index rec = 0;
  auto point = [&](Index k) {
    const Index idx = 2 * k;
    u.noalias() = ctrl.F_c * xc;
    u += in.ur.col(idx);
    e.noalias() = sc.E * x;
    e -= in.ref.col(idx);
    const double g = e.dot(q * e) + u.dot(r_w * u);
    acc += (k == 0 || k == N) ? 0.5 * g : g;
    if (opt.record && (k % opt.decimate == 0 || k == N)) {
      pl.g(x, state_inj ? Vec(sc.disturbance_direction * in.dist(idx)) : w_zero, y);
      y += in.noise.col(k);
      tr.t.push_back(static_cast<double>(k) * h);
      tr.x.col(rec) = x;
      tr.x_q.col(rec) = xc.head(ctrl.nq);
      tr.x_hat.col(rec) = xc.tail(ctrl.n);
      tr.u.col(rec) = u;
      tr.u_r.col(rec) = in.ur.col(idx);
      tr.u_f.col(rec) = ctrl.F_c.leftCols(ctrl.nq) * xc.head(ctrl.nq);
      tr.y.col(rec) = y;
      tr.y_tilde.col(rec) = sc.E * x;
      tr.r.col(rec) = in.ref.col(idx);
      ++rec;
    }
  };

  auto diverged = [&](Index k, const char* why) {
    tr.diverged = true;
    tr.J = kDivergedCost;
    tr.steps_completed = k;
    tr.diagnostic = std::string(why) + " at t = " + std::to_string(static_cast<double>(k) * h);
    if (opt.record) {
      tr.x.conservativeResize(Eigen::NoChange, rec);
      tr.x_hat.conservativeResize(Eigen::NoChange, rec);
      tr.x_q.conservativeResize(Eigen::NoChange, rec);
      for (Mat* mat : {&tr.u, &tr.u_r, &tr.u_f, &tr.y, &tr.y_tilde, &tr.r}) {
        mat->conservativeResize(Eigen::NoChange, rec);
      }
    }
    return tr;
  };

  for (Index k = 0;; ++k) {
    point(k);
    if (k == N) break;
    const Index i0 = 2 * k;
    try {
      deriv(i0, k, x, xc, kx[0], kc[0]);
      xs = x + 0.5 * h * kx[0];
      xcs = xc + 0.5 * h * kc[0];
      deriv(i0 + 1, k, xs, xcs, kx[1], kc[1]);
      xs = x + 0.5 * h * kx[1];
      xcs = xc + 0.5 * h * kc[1];
      deriv(i0 + 1, k, xs, xcs, kx[2], kc[2]);
      xs = x + h * kx[2];
      xcs = xc + h * kc[2];
      deriv(i0 + 2, k, xs, xcs, kx[3], kc[3]);
    } catch (const NumericalError& ex) {
      return diverged(k + 1, ex.what());
    }
    x += (h / 6.0) * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3]);
    xc += (h / 6.0) * (kc[0] + 2.0 * kc[1] + 2.0 * kc[2] + kc[3]);
    if (!x.allFinite() || !xc.allFinite()) return diverged(k + 1, "non-finite state");
    if (x.cwiseAbs().maxCoeff() > sc.divergence_bound) {
      return diverged(k + 1, "state exceeded the divergence bound");
    }
  }
  tr.steps_completed = N;
  tr.J = acc * h / sc.T;
  if (!std::isfinite(tr.J)) {
    tr.diverged = true;
    tr.J = kDivergedCost;
    tr.diagnostic = "non-finite cost";
  }
  return tr;
}

inline RunTrace simulate_run(const Scenario& sc, const TrackingController& ctrl,
                             const FeedforwardProfile& ff, const RunOptions& opt = {}) {
  return simulate_run(sc, ctrl, prepare_inputs(sc, ff), opt);
}

/// J = (1/T)∫[(ỹ−r)ᵀQ(ỹ−r) + uᵀRu]dt by the trapezoid rule on the trace grid.
inline double evaluate_cost(const RunTrace& tr, const Mat& q, const Mat& r) {
  const std::size_t k = tr.t.size();
  if (k < 2) return 0.0;
  auto density = [&](std::size_t i) {
    const Index c = static_cast<Index>(i);
    const Vec e = tr.y_tilde.col(c) - tr.r.col(c);
    return e.dot(q * e) + tr.u.col(c).dot(r * tr.u.col(c));
  };
  double acc = 0.0;
  double prev = density(0);
  for (std::size_t i = 1; i < k; ++i) {
    const double cur = density(i);
    acc += 0.5 * (tr.t[i] - tr.t[i - 1]) * (prev + cur);
    prev = cur;
  }
  return acc / (tr.t.back() - tr.t.front());
}

/// Feed-forward for a scenario and design.
inline FeedforwardProfile scenario_feedforward(const Scenario& sc, const Design& d) {
  return solve_feedforward(d.lqt, d.plant, [&](double t) { return sc.reference_at(t); }, sc.T,
                           sc.h);
}

struct SweepPoint {
  double alpha = 0.0;
  double J = 0.0;
  bool diverged = false;
};

/// J(α) for every α, runs fanned out over `threads` workers (0 = hardware).
/// Results are ordered as `alphas`.
inline std::vector<SweepPoint> sweep_alpha(const Scenario& sc, const Design& d,
                                           const RunInputs& in, const std::vector<double>& alphas,
                                           unsigned threads = 0) {
  for (double a : alphas) {
    if (!std::isfinite(a)) throw ConfigError("sweep_alpha: non-finite α");
  }
  std::vector<SweepPoint> out(alphas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    RunOptions opt;
    opt.record = false;
    for (std::size_t i = next++; i < alphas.size(); i = next++) {
      const RunTrace tr = simulate_run(sc, d.controller(alphas[i]), in, opt);
      out[i] = {alphas[i], tr.J, tr.diverged};
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, alphas.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

/// Grid "start:stop:step" with the end point included when it lies on the grid.
inline std::vector<double> parse_alpha_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ConfigError("alpha grid must be start:stop:step");
  double start = 0, stop = 0, step = 0;
  try {
    std::size_t used = 0;
    start = std::stod(spec.substr(0, c1), &used);
    stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    step = std::stod(spec.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("alpha grid '" + spec + "' is not numeric");
  }
  if (!(step > 0.0) || !(stop >= start)) {
    throw ConfigError("alpha grid needs step > 0 and stop >= start");
  }
  const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  if (count > 1000000) throw ConfigError("alpha grid too large");
  std::vector<double> out;
  for (long long i = 0; i <= count; ++i) out.push_back(start + step * static_cast<double>(i));
  return out;
}

/// Trace as CSV: t, states, u, u_r, u_f, y…, r…; footer comment with the cost.
inline void write_trace_csv(std::ostream& os, const RunTrace& tr,
                            const std::vector<std::string>& state_names) {
  os << std::setprecision(17);
  os << "t";
  for (Index i = 0; i < tr.x.rows(); ++i) {
    os << ',' << (static_cast<std::size_t>(i) < state_names.size() ? state_names[i]
                                                                 : "x" + std::to_string(i + 1));
  }
  auto multi = [&](const char* base, Index rows) {
    for (Index i = 0; i < rows; ++i) {
      os << ',' << base << (rows > 1 || std::string(base) == "y" ? std::to_string(i + 1) : "");
    }
  };
  multi("u", tr.u.rows());
  multi("u_r", tr.u_r.rows());
  multi("u_f", tr.u_f.rows());
  multi("y", tr.y.rows());
  multi("r", tr.r.rows());
  os << '\n';
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const Index c = static_cast<Index>(k);
    os << tr.t[k];
    for (const Mat* mat : {&tr.x, &tr.u, &tr.u_r, &tr.u_f, &tr.y, &tr.r}) {
      for (Index i = 0; i < mat->rows(); ++i) os << ',' << (*mat)(i, c);
    }
    os << '\n';
  }
  os << "# J=" << tr.J << (tr.diverged ? " diverged: " + tr.diagnostic : "") << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& pts) {
  os << std::setprecision(17) << "alpha,J,diverged\n";
  for (const auto& p : pts) os << p.alpha << ',' << p.J << ',' << (p.diverged ? 1 : 0) << '\n';
}

}  // namespace rlqt
