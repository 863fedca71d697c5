#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "rlqt/config.hpp"

namespace rlqt {

namespace rep {

inline json matrix(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json spectrum(std::vector<Complex> ev) {
  std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  json out = json::array();
  for (const Complex& z : ev) out.push_back({z.real(), z.imag()});
  return out;
}

inline json certified_spectrum(const Mat& m) {
  const auto ev = linalg::eigenvalues(m);
  return {{"eigenvalues", spectrum(ev)},
          {"max_real_part", linalg::max_real_part(ev)},
          {"hurwitz", linalg::max_real_part(ev) < 0.0}};
}

}  // namespace rep

/// Worst |λ − target| / |target| after greedy nearest matching.
inline double max_pole_deviation(std::vector<Complex> got, const std::vector<Complex>& targets) {
  if (got.size() != targets.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const Complex& t : targets) {
    auto it = std::min_element(got.begin(), got.end(), [&](Complex a, Complex b) {
      return std::abs(a - t) < std::abs(b - t);
    });
    worst = std::max(worst, std::abs(*it - t) / std::abs(t));
    got.erase(it);
  }
  return worst;
}

/// One reading of how the printed weights map onto (Q, R).
struct WeightReading {
  std::string name;
  Mat Q, R;
  bool lqt_ok = false;
  std::string lqt_error;
  std::vector<Complex> poles;
  double pole_deviation = std::numeric_limits<double>::quiet_NaN();  // vs targets
  bool feasible_at_target = false;   // at the configured γ
  double gamma_opt = std::numeric_limits<double>::quiet_NaN();
};

/// The configured weights and, when Q and R are both scalar, the swapped pair.
inline std::vector<WeightReading> weight_readings(const Config& c, const Design* d = nullptr) {
  std::vector<std::pair<std::string, std::pair<Mat, Mat>>> cases{
      {"C1'C1 = Q, D12'D12 = R", {c.design.Q, c.design.R}}};
  if (c.design.Q.size() == 1 && c.design.R.size() == 1) {
    cases.push_back({"swapped: C1'C1 = R, D12'D12 = Q", {c.design.R, c.design.Q}});
  }
  std::vector<WeightReading> out;
  for (const auto& [name, qr] : cases) {
    WeightReading w;
    w.name = name;
    w.Q = qr.first;
    w.R = qr.second;
    try {
      DesignSpec spec = c.design;
      spec.Q = w.Q;
      spec.R = w.R;
      const LinearPlant lp = with_performance_weights(spec.plant, w.Q, w.R);
      const LqtDesign lqt = design_lqt(lp, w.Q, w.R);
      w.lqt_ok = true;
      w.poles = linalg::eigenvalues(lp.A + lp.B2 * lqt.F);
      if (!c.lqt_pole_targets.empty()) w.pole_deviation = max_pole_deviation(w.poles, c.lqt_pole_targets);
      GeneralizedPlant gp;
      if (d != nullptr && &qr == &cases.front().second) {
        gp = d->augmented;
      } else {
        const ObserverDesign obs =
            spec.observer.method == ObserverSpec::Method::care
                ? design_observer(lp, spec.observer.W, spec.observer.V)
                : place_observer(lp, spec.observer.poles);
        gp = build_augmented_plant(lp, lqt, obs);
      }
      const auto reg = detail::regularize(gp, spec.hinf.regularization);
      w.feasible_at_target = hinf_feasibility(reg.g, spec.gamma).feasible;
      double hi = std::max(1.0, 2.0 * spec.gamma);
      for (int i = 0; i < 40 && !hinf_feasibility(reg.g, hi).feasible; ++i) hi *= 4.0;
      w.gamma_opt = optimal_gamma(gp, 1e-6 * hi, hi, 1e-6, spec.hinf.regularization);
    } catch (const Error& e) {
      if (!w.lqt_ok) w.lqt_error = e.what();
    }
    out.push_back(std::move(w));
  }
  return out;
}

inline json weight_reading_json(const WeightReading& w) {
  json j{{"name", w.name}, {"Q", rep::matrix(w.Q)}, {"R", rep::matrix(w.R)}};
  if (!w.lqt_ok) {
    j["lqt_error"] = w.lqt_error;
    return j;
  }
  j["lqt_closed_loop_poles"] = rep::spectrum(w.poles);
  if (!std::isnan(w.pole_deviation)) j["max_relative_pole_deviation"] = w.pole_deviation;
  j["feasible_at_configured_gamma"] = w.feasible_at_target;
  if (!std::isnan(w.gamma_opt)) j["gamma_opt"] = w.gamma_opt;
  return j;
}

/// Full record of a successful design.
inline json design_report(const Config& c, const Design& d, bool with_readings = true) {
  const LinearPlant& lp = d.plant;
  json r;
  r["status"] = "ok";
  r["config"] = c.source;
  json plant{{"kind", c.plant_kind},
             {"A", rep::matrix(lp.A)},
             {"B1", rep::matrix(lp.B1)},
             {"B2", rep::matrix(lp.B2)},
             {"C1", rep::matrix(lp.C1)},
             {"D12", rep::matrix(lp.D12)},
             {"C2", rep::matrix(lp.C2)},
             {"D21", rep::matrix(lp.D21)},
             {"E", rep::matrix(lp.E)},
             {"stabilizable", is_stabilizable(lp.A, lp.B2)},
             {"detectable", is_detectable(lp.C2, lp.A)},
             {"open_loop", rep::certified_spectrum(lp.A)}};
  if (c.plant_kind == "pendulum") {
    const auto chk = verify_linearization(c.scenario.plant, lp);
    const auto& worst = chk.worst();
    plant["linearization_check"] = {{"max_relative_error", chk.max_rel_error()},
                                    {"worst_block", worst.name},
                                    {"row", worst.row},
                                    {"col", worst.col}};
  }
  r["plant"] = plant;
  json lqt{{"Q", rep::matrix(d.lqt.Q)},
           {"R", rep::matrix(d.lqt.R)},
           {"F", rep::matrix(d.lqt.F)},
           {"P", rep::matrix(d.lqt.P)},
           {"closed_loop", rep::certified_spectrum(lp.A + lp.B2 * d.lqt.F)}};
  if (!c.lqt_pole_targets.empty()) {
    lqt["pole_targets"] = rep::spectrum(c.lqt_pole_targets);
    lqt["max_relative_pole_deviation"] =
        max_pole_deviation(linalg::eigenvalues(lp.A + lp.B2 * d.lqt.F), c.lqt_pole_targets);
  }
  r["lqt"] = lqt;
  json obs{{"method", d.observer.method},
           {"L", rep::matrix(d.observer.L)},
           {"error_dynamics", rep::certified_spectrum(lp.A + d.observer.L * lp.C2)}};
  if (d.observer.Y.size() > 0) obs["Y"] = rep::matrix(d.observer.Y);
  r["observer"] = obs;
  const GeneralizedPlant& g = d.augmented;
  r["augmented"] = {{"states", g.A.rows()},
                    {"disturbances", g.B1.cols()},
                    {"controls", g.B2.cols()},
                    {"performance_outputs", g.C1.rows()},
                    {"measurements", g.C2.rows()},
                    {"A", rep::matrix(g.A)},
                    {"B1", rep::matrix(g.B1)},
                    {"B2", rep::matrix(g.B2)},
                    {"C1", rep::matrix(g.C1)},
                    {"D12", rep::matrix(g.D12)},
                    {"C2", rep::matrix(g.C2)},
                    {"D21", rep::matrix(g.D21)}};
  const FilterQ& q = d.filter;
  r["filter"] = {{"gamma_target", q.gamma},
                 {"gamma_achieved", q.achieved},
                 {"rho_XY", q.rho},
                 {"regularization", q.regularization},
                 {"order", q.nq()},
                 {"A_q", rep::matrix(q.A_q)},
                 {"B_q", rep::matrix(q.B_q)},
                 {"F_q", rep::matrix(q.F_q)},
                 {"dynamics", rep::certified_spectrum(q.A_q)}};
  const auto cl = closed_loop_matrix(d.controller(1.0), lp);
  r["closed_loop_alpha_1"] = rep::certified_spectrum(cl.A);
  if (with_readings) {
    json readings = json::array();
    for (const auto& w : weight_readings(c, &d)) readings.push_back(weight_reading_json(w));
    r["weight_readings"] = readings;
    r["performance_output_readings"] = json::array(
        {{{"rows", lp.p1() + lp.m()},
          {"layout", "[sqrt(Q) E x; sqrt(R) u]"},
          {"status", "used"}},
         {{"rows", 1},
          {"layout", "single row carrying both weights"},
          {"status", "rejected: C1'D12 = 0 cannot hold with both weights nonzero"}}});
  }
  return r;
}

/// Record of a failed design: the stage and the reason, plus whatever
/// weight analysis still runs.
inline json failure_report(const Config& c, const SynthesisError& e) {
  json r{{"status", "failed"}, {"config", c.source}, {"stage", e.stage()}, {"error", e.what()}};
  json readings = json::array();
  for (const auto& w : weight_readings(c)) readings.push_back(weight_reading_json(w));
  r["weight_readings"] = readings;
  return r;
}

}  // namespace rlqt
