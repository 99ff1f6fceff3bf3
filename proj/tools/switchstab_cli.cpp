// switchstab command-line front end.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "switchstab/config.hpp"
#include "switchstab/error.hpp"
#include "switchstab/export.hpp"
#include "switchstab/fixtures.hpp"
#include "switchstab/pso.hpp"
#include "switchstab/sensitivity.hpp"
#include "switchstab/stability.hpp"

namespace fs = std::filesystem;
using namespace switchstab;

namespace {

struct Flags {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> t_end;
  std::optional<int> M;
  std::optional<int> swarm_size;
  std::optional<int> max_iters;
};

RunConfig load(const Flags& f, const RunConfig& fallback = RunConfig{}) {
  RunConfig cfg = f.config.empty() ? fallback : load_config(f.config);
  if (f.seed) cfg.seed = f.seed;
  if (f.t_end) cfg.sim.t_end = *f.t_end;
  if (f.M) cfg.sobol.M = *f.M;
  if (f.swarm_size) cfg.pso.cfg.swarm_size = *f.swarm_size;
  if (f.max_iters) cfg.pso.cfg.max_iters = *f.max_iters;
  cfg.pso.cfg.jobs = f.jobs;
  return cfg;
}

std::string output_dir(const Flags& f, const RunConfig& cfg) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv("SWITCHSTAB_OUT"); env != nullptr && *env != '\0') return env;
  if (!cfg.output_directory.empty()) return cfg.output_directory;
  return "out";
}

std::uint64_t require_seed(const RunConfig& cfg, const char* what) {
  if (!cfg.seed) throw Error(ErrorCode::ConfigError, fmt::format("{} needs an explicit seed ([run] seed or --seed)", what));
  return *cfg.seed;
}

void require_space(const RunConfig& cfg) {
  if (cfg.space.dimension() == 0) throw Error(ErrorCode::ConfigError, "config has no [space] section");
}

OscillationMetrics<double> run_simulation(const RunConfig& cfg, const std::string& dir) {
  const SwitchedSystemd sys = build_system(cfg);
  EventOptions opts;
  opts.integrator = cfg.sim.integrator;
  const auto traj = simulate(sys, cfg.sim.x0, cfg.sim.sigma0, cfg.sim.t_end, cfg.sim.dt, opts);
  const auto metrics = oscillation_metrics(traj);
  write_text(dir + "/trajectory.csv", trajectory_csv(traj));
  write_text(dir + "/events.csv", events_csv(traj));
  write_json(dir + "/metrics.json", metrics_json(metrics));
  return metrics;
}

std::vector<EquilibriumReport<double>> run_equilibria(const RunConfig& cfg, const std::string& dir) {
  RunConfig threshold = cfg;
  threshold.sim.law = LawKind::Threshold;
  const SwitchedSystemd sys = build_system(threshold);
  std::vector<EquilibriumReport<double>> reports{classify_equilibrium(sys, 1), classify_equilibrium(sys, 2)};
  write_json(dir + "/equilibria.json", equilibria_json(reports));
  return reports;
}

StabilityCertificate run_stability(const RunConfig& cfg, const std::string& dir) {
  const WtGscParams p = resolved_params(cfg);
  validate(p);
  const auto cert = max_stability_index(p, {cfg.stability.mu_tolerance, cfg.stability.report_negative});
  write_json(dir + "/certificate.json", certificate_json(cert));
  if (cfg.stability.audit && cert.feasible) {
    AuditOptions ao;
    ao.seed = require_seed(cfg, "the certificate audit");
    ao.starts = cfg.stability.audit_starts;
    const SwitchedSystemd sys = make_wtgsc_system(p);
    write_json(dir + "/audit.json", audit_json(audit_certificate(cert, sys, ao)));
  }
  return cert;
}

int cmd_simulate(const Flags& f) {
  const RunConfig cfg = load(f, fixtures::nominal());
  const std::string dir = output_dir(f, cfg);
  const auto m = run_simulation(cfg, dir);
  fmt::print("{} switching events, converged = {}, outputs in {}\n", m.switch_count, m.converged, dir);
  return 0;
}

int cmd_equilibria(const Flags& f) {
  const RunConfig cfg = load(f, fixtures::nominal());
  const std::string dir = output_dir(f, cfg);
  for (const auto& r : run_equilibria(cfg, dir))
    fmt::print("mode {}: x* = ({:.6f}, {:.6f}), v_g = {:.6f}, {}\n", r.mode, r.x_star(0), r.x_star(1), r.v_g,
               to_string(r.kind));
  return 0;
}

int cmd_stability(const Flags& f) {
  const RunConfig cfg = load(f, fixtures::nominal());
  const std::string dir = output_dir(f, cfg);
  const auto cert = run_stability(cfg, dir);
  fmt::print("mu = {:.6g}, feasible = {}, x_e = ({:.6f}, {:.6f}), p = {:.6g}\n", cert.mu, cert.feasible, cert.x_e(0),
             cert.x_e(1), cert.p);
  return 0;
}

int cmd_sobol(const Flags& f) {
  const RunConfig cfg = load(f, fixtures::study());
  require_space(cfg);
  const std::string dir = output_dir(f, cfg);
  SobolOptions so;
  so.policy = cfg.sobol.policy;
  so.penalty = cfg.sobol.penalty;
  so.skip = cfg.sobol.skip;
  so.bootstrap_resamples = cfg.sobol.bootstrap;
  so.bootstrap_seed = require_seed(cfg, "sobol");
  so.jobs = f.jobs;
  const auto model = stability_model(cfg.space, cfg.params, cfg.target_normal_voltage);
  const auto res = estimate_indices(cfg.space, model, cfg.sobol.M, so);
  write_text(dir + "/sobol.csv", sobol_csv(cfg.space, res));
  write_json(dir + "/sobol.json", sobol_json(cfg.space, res));
  for (int i = 0; i < cfg.space.dimension(); ++i)
    fmt::print("{:>5}  S = {:8.4f}  S_T = {:8.4f}\n", cfg.space.names[i], res.S(i), res.S_T(i));
  return 0;
}

int cmd_pso(const Flags& f) {
  RunConfig cfg = load(f, fixtures::study());
  require_space(cfg);
  const std::string dir = output_dir(f, cfg);
  PsoConfig pc = cfg.pso.cfg;
  pc.seed = require_seed(cfg, "pso");
  const int k = cfg.space.dimension();
  pc.baseline.resize(k);
  for (int i = 0; i < k; ++i) pc.baseline(i) = get_parameter(cfg.params, cfg.space.names[i]);
  if (!cfg.pso.subset.empty()) {
    pc.subset_mask.assign(k, false);
    for (int i = 0; i < k; ++i)
      pc.subset_mask[i] = std::find(cfg.pso.subset.begin(), cfg.pso.subset.end(), cfg.space.names[i]) !=
                          cfg.pso.subset.end();
  }
  const auto fitness =
      penalized(stability_model(cfg.space, cfg.params, cfg.target_normal_voltage), cfg.sobol.penalty);
  const auto res = pso_optimize(cfg.space, fitness, pc);
  write_json(dir + "/pso.json", pso_json(cfg.space, res));
  write_text(dir + "/pso_history.csv", pso_history_csv(res));
  fmt::print("best mu = {:.6g} after {} iterations ({} evaluations)\n", res.best_fitness, res.iterations,
             res.evaluations);
  return 0;
}

Json check(const std::string& name, bool pass, Json detail) {
  return Json{{"check", name}, {"pass", pass}, {"detail", std::move(detail)}};
}

int cmd_reproduce(const Flags& f) {
  const std::string dir = output_dir(f, fixtures::nominal());
  Json checks = Json::array();

  const RunConfig base = fixtures::nominal();
  const auto eq = run_equilibria(base, dir + "/nominal");
  const auto& n = eq[0];
  const auto& l = eq[1];
  checks.push_back(check("equilibria",
                         std::abs(n.x_star(0) - 1.0) <= 1e-6 && std::abs(n.x_star(1)) <= 1e-6 &&
                             std::abs(n.v_g - 0.79) <= 0.005 && std::abs(l.x_star(1) + 0.11) <= 0.02 &&
                             std::abs(l.v_g - 0.84) <= 0.02,
                         {{"normal", {n.x_star(0), n.x_star(1), n.v_g}}, {"lvrt", {l.x_star(0), l.x_star(1), l.v_g}}}));

  const auto m = run_simulation(base, dir + "/nominal");
  const bool crosses = m.v_g_range && m.v_g_range->first < 0.8 && m.v_g_range->second > 0.8;
  checks.push_back(check("sustained_oscillation", !m.converged && m.switch_count >= 10 && crosses,
                         metrics_json(m)));
  checks.push_back(check("oscillation_period",
                         m.mean_period && *m.mean_period >= 0.05 && *m.mean_period <= 0.4,
                         m.mean_period ? Json(*m.mean_period) : Json(nullptr)));

  const RunConfig blocked = fixtures::blocked_lvrt();
  const auto mb = run_simulation(blocked, dir + "/blocked_lvrt");
  const auto eb = run_equilibria(blocked, dir + "/blocked_lvrt");
  checks.push_back(check("blocked_lvrt", mb.converged && mb.final_mode == 1 && eb[0].kind == EquilibriumKind::Virtual,
                         metrics_json(mb)));

  const RunConfig cont = fixtures::continuous_lvrt();
  const auto mc = run_simulation(cont, dir + "/continuous_lvrt");
  const auto ec = run_equilibria(cont, dir + "/continuous_lvrt");
  checks.push_back(check("continuous_lvrt",
                         mc.converged && mc.final_mode == 2 && ec[1].kind == EquilibriumKind::Regular,
                         metrics_json(mc)));

  RunConfig opt = fixtures::optimum();
  opt.stability.audit = true;
  const auto c4 = run_stability(opt, dir + "/optimum");
  const auto c1 = run_stability(base, dir + "/nominal");
  checks.push_back(check("stability_index",
                         c4.feasible && std::abs(c4.mu - 48.5) <= 0.25 * 48.5 && c4.mu > c1.mu,
                         {{"optimum_mu", c4.mu}, {"baseline_mu", c1.mu}}));

  bool all = true;
  for (const auto& c : checks) all = all && c["pass"].get<bool>();
  write_json(dir + "/reproduce.json", Json{{"pass", all}, {"checks", checks}});
  for (const auto& c : checks)
    fmt::print("{} {}\n", c["pass"].get<bool>() ? "PASS" : "FAIL", c["check"].get<std::string>());
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switched-system analysis of a grid-side converter under repeated LVRT"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "INI run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (default: $SWITCHSTAB_OUT, then [output] directory, then ./out)");
    sub->add_option("--jobs", f.jobs, "concurrent evaluator workers")->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "seed for randomized stages");
  };

  auto* sim = app.add_subcommand("simulate", "simulate the switched system");
  common(sim);
  sim->add_option("--t-end", f.t_end, "simulation horizon (s)");
  auto* eq = app.add_subcommand("equilibria", "classify the subsystem equilibria");
  common(eq);
  auto* stab = app.add_subcommand("stability", "compute the stability index and certificate");
  common(stab);
  auto* sob = app.add_subcommand("sobol", "Sobol' sensitivity of the stability index");
  common(sob);
  sob->add_option("--M", f.M, "base sample count (power of two)");
  auto* pso = app.add_subcommand("pso", "maximize the stability index with a particle swarm");
  common(pso);
  pso->add_option("--swarm-size", f.swarm_size, "particles");
  pso->add_option("--max-iters", f.max_iters, "iterations");
  auto* rep = app.add_subcommand("reproduce", "run the bundled fixtures and check them");
  common(rep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(f);
    if (eq->parsed()) return cmd_equilibria(f);
    if (stab->parsed()) return cmd_stability(f);
    if (sob->parsed()) return cmd_sobol(f);
    if (pso->parsed()) return cmd_pso(f);
    if (rep->parsed()) return cmd_reproduce(f);
  } catch (const Error& e) {
    std::cerr << "switchstab: " << e.what() << '\n';
    return is_criterion_inapplicable(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "switchstab: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
