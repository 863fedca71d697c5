// rlqt: design, simulate, sweep and tune the robust tracking controller from a
// JSON config.
//
// Exit codes: 0 ok, 1 internal error, 2 config error, 3 synthesis infeasible,
// 4 simulation divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "rlqt/config.hpp"
#include "rlqt/report.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kInfeasible = 3, kDiverged = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<rlqt::Index> decimate;
  std::optional<std::string> preset;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Measurement-noise seed (overrides scenario.noise.seed)");
  sub->add_option("--out-dir", c.out_dir, "Directory for artifacts (overrides output.dir)");
  sub->add_option("--decimate", c.decimate, "Keep every n-th trace sample")
      ->check(CLI::PositiveNumber);
  sub->add_option("--preset", c.preset, "Scenario preset: caseA_w1, caseA_w2, caseB_w1, caseB_w2");
}

rlqt::Config load(const Common& c) {
  rlqt::Config cfg = rlqt::load_config(c.config);
  if (c.seed) cfg.scenario.noise_seed = *c.seed;
  if (c.out_dir) cfg.output.dir = *c.out_dir;
  if (c.decimate) cfg.output.decimate = *c.decimate;
  if (c.preset) rlqt::apply_preset(cfg.scenario, *c.preset);
  return cfg;
}

fs::path artifact(const rlqt::Config& cfg, const std::string& name) {
  fs::create_directories(cfg.output.dir);
  return fs::path(cfg.output.dir) / name;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw rlqt::ConfigError("cannot write '" + p.string() + "'");
  return os;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

int cmd_synth(const Common& c) {
  const rlqt::Config cfg = load(c);
  const fs::path out = artifact(cfg, cfg.output.report);
  try {
    const rlqt::Design d = rlqt::run_design(cfg.design);
    open_out(out) << std::setw(2) << rlqt::design_report(cfg, d) << '\n';
    std::cout << "gamma_target=" << d.filter.gamma << '\n'
              << "gamma_achieved=" << fmt(d.filter.achieved) << '\n'
              << "filter_order=" << d.filter.nq() << '\n'
              << "report=" << out.string() << '\n';
  } catch (const rlqt::SynthesisError& e) {
    open_out(out) << std::setw(2) << rlqt::failure_report(cfg, e) << '\n';
    std::cerr << "synthesis failed at stage '" << e.stage() << "': " << e.what() << '\n';
    std::cout << "report=" << out.string() << '\n';
    return kInfeasible;
  }
  return kOk;
}

int cmd_simulate(const Common& c, std::optional<double> alpha) {
  const rlqt::Config cfg = load(c);
  const rlqt::Design d = rlqt::run_design(cfg.design);
  const double a = alpha.value_or(cfg.alpha);
  const auto ff = rlqt::scenario_feedforward(cfg.scenario, d);
  const auto tr = rlqt::simulate_run(cfg.scenario, d.controller(a), ff, {true, cfg.output.decimate});
  const fs::path out = artifact(cfg, cfg.output.trace);
  auto os = open_out(out);
  rlqt::write_trace_csv(os, tr, cfg.scenario.state_names);
  std::cout << "trace=" << out.string() << '\n';
  if (tr.diverged) std::cerr << "run diverged: " << tr.diagnostic << '\n';
  std::cout << "J=" << fmt(tr.J) << '\n';
  return tr.diverged ? kDiverged : kOk;
}

int cmd_sweep(const Common& c, std::optional<std::string> grid, unsigned threads) {
  const rlqt::Config cfg = load(c);
  const auto alphas = rlqt::parse_alpha_grid(grid.value_or(cfg.alpha_grid));
  const rlqt::Design d = rlqt::run_design(cfg.design);
  const auto in = rlqt::prepare_inputs(cfg.scenario, rlqt::scenario_feedforward(cfg.scenario, d));
  const auto pts = rlqt::sweep_alpha(cfg.scenario, d, in, alphas, threads);
  const fs::path out = artifact(cfg, cfg.output.sweep);
  auto os = open_out(out);
  rlqt::write_sweep_csv(os, pts);
  const rlqt::SweepPoint* best = nullptr;
  int diverged = 0;
  for (const auto& p : pts) {
    if (p.diverged) {
      ++diverged;
      continue;
    }
    if (best == nullptr || p.J < best->J) best = &p;
  }
  std::cout << "sweep=" << out.string() << '\n' << "diverged_points=" << diverged << '\n';
  if (best == nullptr) {
    std::cerr << "every run in the sweep diverged\n";
    return kDiverged;
  }
  std::cout << "alpha_min=" << fmt(best->alpha) << '\n' << "J_min=" << fmt(best->J) << '\n';
  return kOk;
}

int cmd_tune(const Common& c, std::optional<int> k_max) {
  rlqt::Config cfg = load(c);
  if (k_max) cfg.es.params.k_max = *k_max;
  const rlqt::Design d = rlqt::run_design(cfg.design);
  const rlqt::CostFn cost = rlqt::simulation_cost(cfg.scenario, d);
  rlqt::EsParams p = cfg.es.params;
  if (cfg.es.prescan_delta) {
    const auto ps = rlqt::prescan(cost, p, cfg.es.rule, cfg.es.contraction);
    p.delta = ps.delta;
    p.zeta0 = ps.zeta0;
    std::cout << "prescan_curvature=" << fmt(ps.curvature) << '\n'
              << "delta=" << fmt(p.delta) << (ps.fell_back ? " (normalized fallback)" : "") << '\n';
  } else {
    std::cout << "delta=" << fmt(p.delta) << '\n';
  }
  const auto res = rlqt::tune(cost, p);
  const fs::path out = artifact(cfg, cfg.output.history);
  auto os = open_out(out);
  rlqt::write_history_csv(os, res.history);
  const auto final_cost = cost(res.alpha_star);
  std::cout << "history=" << out.string() << '\n'
            << "diverged_runs=" << res.diverged_runs << '\n'
            << "J_alpha0=" << fmt(res.history.front().J) << '\n'
            << "J_alpha_star=" << fmt(final_cost.J) << '\n'
            << "alpha_star=" << fmt(res.alpha_star) << '\n';
  return final_cost.diverged ? kDiverged : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust LQT design with an extremum-seeking tuned H-infinity filter"};
  app.require_subcommand(1);

  Common synth_c, sim_c, sweep_c, tune_c;
  std::optional<double> alpha;
  std::optional<std::string> grid;
  std::optional<int> k_max;
  unsigned threads = 0;

  auto* synth = app.add_subcommand("synth", "Run the design chain and write a JSON report");
  add_common(synth, synth_c);
  auto* sim = app.add_subcommand("simulate", "Simulate one closed-loop run and write its trace");
  add_common(sim, sim_c);
  sim->add_option("--alpha", alpha, "Filter gain factor (overrides scenario.alpha)");
  auto* sweep = app.add_subcommand("sweep", "Evaluate J over a grid of alpha values");
  add_common(sweep, sweep_c);
  sweep->add_option("--alpha-grid", grid, "Grid as start:stop:step");
  sweep->add_option("--threads", threads, "Worker threads (0 = all cores)");
  auto* tune = app.add_subcommand("tune", "Tune alpha by extremum seeking");
  add_common(tune, tune_c);
  tune->add_option("--k-max", k_max, "Iteration budget (overrides es.k_max)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) return cmd_synth(synth_c);
    if (*sim) return cmd_simulate(sim_c, alpha);
    if (*sweep) return cmd_sweep(sweep_c, grid, threads);
    if (*tune) return cmd_tune(tune_c, k_max);
  } catch (const rlqt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const rlqt::SynthesisError& e) {
    std::cerr << "synthesis failed at stage '" << e.stage() << "': " << e.what() << '\n';
    return kInfeasible;
  } catch (const rlqt::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
