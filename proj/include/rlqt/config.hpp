#pragma once

#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlqt/design.hpp"
#include "rlqt/estuner.hpp"
#include "rlqt/sim.hpp"

namespace rlqt {

using json = nlohmann::json;

struct EsSettings {
  EsParams params;
  bool prescan_delta = true;  // δ and ζ(0) from prescan() unless given
  DeltaRule rule = DeltaRule::curvature;
  double contraction = 0.1;
};

struct OutputSettings {
  std::string dir = "out";
  Index decimate = 10;
  std::string trace = "trace.csv";
  std::string sweep = "sweep.csv";
  std::string history = "history.csv";
  std::string report = "design_report.json";
};

/// Everything a CLI run needs, with defaults applied.
struct Config {
  std::string source;
  std::string plant_kind = "pendulum";  // or "linear"
  PendulumParams pendulum;
  DesignSpec design;
  std::vector<Complex> lqt_pole_targets;  // optional, reported against
  Scenario scenario;
  double alpha = 1.0;                     // simulate
  std::string alpha_grid = "0:2.5:0.05";  // sweep
  EsSettings es;
  OutputSettings output;
};

namespace cfg {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

inline double number_or(const json& obj, const char* key, double fallback,
                        const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

inline std::string string_or(const json& obj, const char* key, const std::string& fallback,
                             const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

inline Vec vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

/// A number is a 1x1 matrix; otherwise an array of equally long rows.
inline Mat matrix(const json& j, const std::string& where) {
  if (j.is_number()) return Mat::Constant(1, 1, number(j, where));
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a matrix (array of rows)");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ConfigError(where + ": rows must be arrays of equal length");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Index>(i), static_cast<Index>(k)) =
          number(j[i][k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
  }
  return m;
}

/// Poles as [re, im] pairs or plain reals.
inline std::vector<Complex> poles(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of poles");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    if (j[i].is_number()) {
      out.emplace_back(number(j[i], w), 0.0);
    } else if (j[i].is_array() && j[i].size() == 2) {
      out.emplace_back(number(j[i][0], w), number(j[i][1], w));
    } else {
      throw ConfigError(w + ": expected a number or [re, im]");
    }
  }
  return out;
}

/// Signal block; amplitudes may be given in degrees with "amplitude_deg".
inline Signal signal(const json& j, const std::string& where, double horizon) {
  check_keys(j, {"kind", "amplitude", "amplitude_deg", "hz", "rad_s", "rate", "std", "seed", "hold"},
             where);
  const std::string kind = string_or(j, "kind", "zero", where);
  if (j.contains("amplitude") && j.contains("amplitude_deg")) {
    throw ConfigError(where + ": give amplitude or amplitude_deg, not both");
  }
  const double amp = j.contains("amplitude_deg")
                         ? degrees_to_radians(number(j.at("amplitude_deg"), where + ".amplitude_deg"))
                         : number_or(j, "amplitude", 0.0, where);
  if (kind == "zero") return Signal::zero();
  if (kind == "constant") return Signal::constant(amp);
  if (kind == "square") return Signal::square(amp, number_or(j, "hz", 0.0, where));
  if (kind == "sinusoid") return Signal::sinusoid(amp, number_or(j, "rad_s", 0.0, where));
  if (kind == "exp_decay") return Signal::exp_decay(amp, number_or(j, "rate", 0.0, where));
  if (kind == "white_noise") {
    const double seed = number_or(j, "seed", 1.0, where);
    if (seed < 0 || seed != std::floor(seed)) throw ConfigError(where + ".seed: expected an integer");
    return Signal::white_noise(number_or(j, "std", 0.0, where), static_cast<std::uint64_t>(seed),
                               number_or(j, "hold", 1e-2, where), horizon);
  }
  throw ConfigError(where + ": unknown signal kind '" + kind + "'");
}

}  // namespace cfg

/// Reference/disturbance pairs of the four shipped experiments.
inline std::vector<std::string> preset_names() {
  return {"caseA_w1", "caseA_w2", "caseB_w1", "caseB_w2"};
}

inline void apply_preset(Scenario& sc, const std::string& name) {
  if (name.size() != 8 || name.rfind("case", 0) != 0 || name[5] != '_') {
    throw ConfigError("unknown scenario preset '" + name + "'");
  }
  if (name[4] == 'A') {
    sc.reference = Signal::square(degrees_to_radians(20.0), 0.05);
  } else if (name[4] == 'B') {
    sc.reference = Signal::sinusoid(std::numbers::pi / 3.0, std::numbers::pi);
  } else {
    throw ConfigError("unknown scenario preset '" + name + "'");
  }
  const std::string w = name.substr(6);
  if (w == "w1") {
    sc.disturbance = Signal::square(2.0, 0.5);
  } else if (w == "w2") {
    sc.disturbance = Signal::exp_decay(5.0, 0.1);
  } else {
    throw ConfigError("unknown scenario preset '" + name + "'");
  }
  sc.name = name;
}

inline Config parse_config(const json& root, const std::string& source = "<memory>") {
  using namespace cfg;
  check_keys(root, {"plant", "design", "scenario", "es", "output"}, "config");
  Config c;
  c.source = source;
  const json empty = json::object();
  auto section = [&](const char* key) -> const json& {
    return root.contains(key) ? root.at(key) : empty;
  };

  // plant
  const json& pj = section("plant");
  check_keys(pj, {"kind", "params", "A", "B1", "B2", "C2", "D21", "E", "state_names"}, "plant");
  c.plant_kind = string_or(pj, "kind", "pendulum", "plant");
  LinearPlant lp;
  NonlinearPlant nl;
  if (c.plant_kind == "pendulum") {
    for (const char* k : {"A", "B2", "E"}) {
      if (pj.contains(k)) throw ConfigError(std::string("plant.") + k + ": not used by a pendulum plant");
    }
    if (pj.contains("params")) {
      const json& pp = pj.at("params");
      check_keys(pp, {"Rm", "km", "r", "l", "mp", "g", "br", "bp", "Jr", "Jp"}, "plant.params");
      PendulumParams& p = c.pendulum;
      p.Rm = number_or(pp, "Rm", p.Rm, "plant.params");
      p.km = number_or(pp, "km", p.km, "plant.params");
      p.r = number_or(pp, "r", p.r, "plant.params");
      p.l = number_or(pp, "l", p.l, "plant.params");
      p.mp = number_or(pp, "mp", p.mp, "plant.params");
      p.g = number_or(pp, "g", p.g, "plant.params");
      p.br = number_or(pp, "br", p.br, "plant.params");
      p.bp = number_or(pp, "bp", p.bp, "plant.params");
      p.Jr = number_or(pp, "Jr", p.Jr, "plant.params");
      p.Jp = number_or(pp, "Jp", p.Jp, "plant.params");
    }
    try {
      lp = pendulum_linearize(c.pendulum);
    } catch (const Error& e) {
      throw ConfigError(std::string("plant.params: ") + e.what());
    }
    if (pj.contains("B1")) lp.B1 = matrix(pj.at("B1"), "plant.B1");
    if (pj.contains("C2")) lp.C2 = matrix(pj.at("C2"), "plant.C2");
    if (pj.contains("D21")) lp.D21 = matrix(pj.at("D21"), "plant.D21");
    try {
      nl = make_pendulum_plant(c.pendulum, lp.B1, lp.C2, lp.D21);
    } catch (const Error& e) {
      throw ConfigError(std::string("plant: ") + e.what());
    }
    c.scenario.state_names = {"theta", "alpha_p", "dtheta", "dalpha_p"};
  } else if (c.plant_kind == "linear") {
    if (pj.contains("params")) throw ConfigError("plant.params: only used by a pendulum plant");
    for (const char* k : {"A", "B2", "C2"}) {
      if (!pj.contains(k)) throw ConfigError(std::string("plant.") + k + ": required for a linear plant");
    }
    lp.A = matrix(pj.at("A"), "plant.A");
    lp.B2 = matrix(pj.at("B2"), "plant.B2");
    lp.C2 = matrix(pj.at("C2"), "plant.C2");
    const Index n = lp.A.rows();
    lp.B1 = pj.contains("B1") ? matrix(pj.at("B1"), "plant.B1") : Mat::Zero(n, 0);
    lp.D21 = pj.contains("D21") ? matrix(pj.at("D21"), "plant.D21") : Mat::Zero(lp.C2.rows(), lp.B1.cols());
    lp.E = pj.contains("E") ? matrix(pj.at("E"), "plant.E") : Mat(lp.C2);
    try {
      lp.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("plant: ") + e.what());
    }
    nl = as_nonlinear(lp);
  } else {
    throw ConfigError("plant.kind: expected 'pendulum' or 'linear', got '" + c.plant_kind + "'");
  }
  if (pj.contains("state_names")) {
    const json& sn = pj.at("state_names");
    if (!sn.is_array() || sn.size() != static_cast<std::size_t>(lp.n())) {
      throw ConfigError("plant.state_names: expected one name per state");
    }
    c.scenario.state_names.clear();
    for (const auto& s : sn) {
      if (!s.is_string()) throw ConfigError("plant.state_names: expected strings");
      c.scenario.state_names.push_back(s.get<std::string>());
    }
  }

  // design
  const json& dj = section("design");
  check_keys(dj, {"Q", "R", "observer", "gamma", "regularization", "lqt_pole_targets"}, "design");
  DesignSpec& ds = c.design;
  ds.plant = lp;
  ds.Q = dj.contains("Q") ? matrix(dj.at("Q"), "design.Q") : Mat::Constant(1, 1, 225.0);
  ds.R = dj.contains("R") ? matrix(dj.at("R"), "design.R") : Mat::Constant(1, 1, 2.0);
  if (ds.Q.rows() != lp.p1() || ds.Q.cols() != lp.p1()) {
    throw ConfigError("design.Q: expected " + std::to_string(lp.p1()) + "x" +
                      std::to_string(lp.p1()));
  }
  if (ds.R.rows() != lp.m() || ds.R.cols() != lp.m()) {
    throw ConfigError("design.R: expected " + std::to_string(lp.m()) + "x" + std::to_string(lp.m()));
  }
  ds.gamma = number_or(dj, "gamma", 0.5, "design");
  if (!(ds.gamma > 0.0)) throw ConfigError("design.gamma: must be positive");
  ds.hinf.regularization = number_or(dj, "regularization", ds.hinf.regularization, "design");
  if (!(ds.hinf.regularization > 0.0)) throw ConfigError("design.regularization: must be positive");
  if (dj.contains("observer")) {
    const json& oj = dj.at("observer");
    check_keys(oj, {"method", "poles", "W", "V"}, "design.observer");
    const std::string method = string_or(oj, "method", "place", "design.observer");
    if (method == "place") {
      ds.observer.method = ObserverSpec::Method::place;
      if (!oj.contains("poles")) throw ConfigError("design.observer.poles: required for placement");
      ds.observer.poles = poles(oj.at("poles"), "design.observer.poles");
    } else if (method == "care") {
      ds.observer.method = ObserverSpec::Method::care;
      if (!oj.contains("W") || !oj.contains("V")) {
        throw ConfigError("design.observer: W and V are required for the care method");
      }
      ds.observer.W = matrix(oj.at("W"), "design.observer.W");
      ds.observer.V = matrix(oj.at("V"), "design.observer.V");
    } else {
      throw ConfigError("design.observer.method: expected 'place' or 'care'");
    }
  } else if (c.plant_kind == "pendulum") {
    ds.observer.method = ObserverSpec::Method::place;
    ds.observer.poles = default_pendulum_observer_poles();
  } else {
    throw ConfigError("design.observer: required for a linear plant");
  }
  if (dj.contains("lqt_pole_targets")) {
    c.lqt_pole_targets = poles(dj.at("lqt_pole_targets"), "design.lqt_pole_targets");
  }

  // scenario
  const json& sj = section("scenario");
  check_keys(sj, {"preset", "reference", "disturbance", "noise", "T", "h", "x0",
                  "divergence_bound", "alpha", "alpha_grid"},
             "scenario");
  Scenario& sc = c.scenario;
  sc.plant = nl;
  sc.E = lp.E;
  sc.Q = ds.Q;
  sc.R = ds.R;
  sc.T = number_or(sj, "T", 20.0, "scenario");
  sc.h = number_or(sj, "h", 1e-4, "scenario");
  sc.name = "custom";
  if (sj.contains("preset")) {
    if (!sj.at("preset").is_string()) throw ConfigError("scenario.preset: expected a string");
    apply_preset(sc, sj.at("preset").get<std::string>());
  }
  if (sj.contains("reference")) sc.reference = signal(sj.at("reference"), "scenario.reference", sc.T);
  if (sj.contains("disturbance")) {
    json dist = sj.at("disturbance");
    if (dist.is_object() && dist.contains("injection")) {
      const json inj = dist.at("injection");
      dist.erase("injection");
      if (inj == "input") {
        sc.injection = Scenario::Injection::input;
      } else if (inj == "state") {
        sc.injection = Scenario::Injection::state;
      } else {
        throw ConfigError("scenario.disturbance.injection: expected 'input' or 'state'");
      }
    }
    if (dist.is_object() && dist.contains("direction")) {
      sc.disturbance_direction = vector(dist.at("direction"), "scenario.disturbance.direction");
      dist.erase("direction");
    }
    sc.disturbance = signal(dist, "scenario.disturbance", sc.T);
  }
  if (sj.contains("noise")) {
    const json& nj = sj.at("noise");
    check_keys(nj, {"std", "seed"}, "scenario.noise");
    sc.noise_std = number_or(nj, "std", sc.noise_std, "scenario.noise");
    const double seed = number_or(nj, "seed", 1.0, "scenario.noise");
    if (seed < 0 || seed != std::floor(seed)) throw ConfigError("scenario.noise.seed: expected an integer");
    sc.noise_seed = static_cast<std::uint64_t>(seed);
  }
  sc.x0 = sj.contains("x0") ? vector(sj.at("x0"), "scenario.x0") : Vec::Zero(lp.n());
  sc.divergence_bound = number_or(sj, "divergence_bound", sc.divergence_bound, "scenario");
  c.alpha = number_or(sj, "alpha", c.alpha, "scenario");
  c.alpha_grid = string_or(sj, "alpha_grid", c.alpha_grid, "scenario");
  parse_alpha_grid(c.alpha_grid);
  sc.validate();

  // es
  const json& ej = section("es");
  check_keys(ej, {"a", "h", "beta", "delta", "delta_rule", "contraction", "k_max", "alpha0", "zeta0"},
             "es");
  EsParams& ep = c.es.params;
  ep.a = number_or(ej, "a", ep.a, "es");
  ep.h = number_or(ej, "h", ep.h, "es");
  ep.beta = number_or(ej, "beta", ep.beta, "es");
  ep.alpha0 = number_or(ej, "alpha0", ep.alpha0, "es");
  ep.zeta0 = number_or(ej, "zeta0", ep.zeta0, "es");
  const double k_max = number_or(ej, "k_max", ep.k_max, "es");
  if (k_max != std::floor(k_max) || k_max < 1 || k_max > 1e7) {
    throw ConfigError("es.k_max: expected a positive integer");
  }
  ep.k_max = static_cast<int>(k_max);
  if (ej.contains("delta") && !(ej.at("delta").is_string() && ej.at("delta") == "prescan")) {
    ep.delta = number(ej.at("delta"), "es.delta");
    c.es.prescan_delta = false;
  }
  const std::string rule = string_or(ej, "delta_rule", "curvature", "es");
  if (rule == "curvature") {
    c.es.rule = DeltaRule::curvature;
  } else if (rule == "normalized") {
    c.es.rule = DeltaRule::normalized;
  } else {
    throw ConfigError("es.delta_rule: expected 'curvature' or 'normalized'");
  }
  c.es.contraction = number_or(ej, "contraction", c.es.contraction, "es");
  if (!(c.es.contraction > 0.0 && c.es.contraction < 1.0)) {
    throw ConfigError("es.contraction: must lie in (0, 1)");
  }
  if (c.es.prescan_delta) {
    EsParams probe = ep;
    probe.delta = 1.0;
    probe.validate();
  } else {
    ep.validate();
  }

  // output
  const json& oj = section("output");
  check_keys(oj, {"dir", "decimate", "trace", "sweep", "history", "report"}, "output");
  OutputSettings& out = c.output;
  out.dir = string_or(oj, "dir", out.dir, "output");
  const double dec = number_or(oj, "decimate", static_cast<double>(out.decimate), "output");
  if (dec < 1 || dec != std::floor(dec)) throw ConfigError("output.decimate: expected an integer >= 1");
  out.decimate = static_cast<Index>(dec);
  out.trace = string_or(oj, "trace", out.trace, "output");
  out.sweep = string_or(oj, "sweep", out.sweep, "output");
  out.history = string_or(oj, "history", out.history, "output");
  out.report = string_or(oj, "report", out.report, "output");
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json root;
  try {
    root = json::parse(in, nullptr, true, /*ignore_comments=*/false);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(root, path);
}

}  // namespace rlqt
