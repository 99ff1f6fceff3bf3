#include "switchstab/export.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "switchstab/error.hpp"

namespace switchstab {

namespace {

std::string g9(double v) { return fmt::format("{:.9g}", v); }

// NaN and infinities become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec(const Vec2d& v) { return Json::array({number(v(0)), number(v(1))}); }

}  // namespace

std::string trajectory_csv(const Trajectoryd& traj) {
  std::string out = "t,i_d,i_q,sigma,v_g,P_g,Q_g\n";
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const DerivedSignals<double> d = i < traj.derived.size() ? traj.derived[i] : DerivedSignals<double>{};
    out += fmt::format("{},{},{},{},{},{},{}\n", g9(s.t), g9(s.x(0)), g9(s.x(1)), s.sigma, g9(d.v_g), g9(d.p_g),
                       g9(d.q_g));
  }
  return out;
}

std::string events_csv(const Trajectoryd& traj) {
  std::string out = "t_switch,from_mode,to_mode\n";
  for (const auto& e : traj.events) out += fmt::format("{},{},{}\n", g9(e.t_switch), e.from_mode, e.to_mode);
  return out;
}

Json metrics_json(const OscillationMetrics<double>& m) {
  Json j;
  j["switch_count"] = m.switch_count;
  j["mean_period"] = m.mean_period ? number(*m.mean_period) : Json(nullptr);
  j["v_g_range"] = m.v_g_range ? Json::array({number(m.v_g_range->first), number(m.v_g_range->second)}) : Json(nullptr);
  j["converged"] = m.converged;
  j["final_mode"] = m.final_mode;
  return j;
}

Json equilibria_json(const std::vector<EquilibriumReport<double>>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) {
    Json j;
    j["mode"] = r.mode;
    j["x_star"] = vec(r.x_star);
    j["kind"] = to_string(r.kind);
    j["region_margin"] = number(r.region_margin);
    j["v_g"] = number(r.v_g);
    arr.push_back(j);
  }
  return arr;
}

Json certificate_json(const StabilityCertificate& cert) {
  Json j;
  j["x_e"] = vec(cert.x_e);
  j["lambda1"] = number(cert.lambda1);
  j["p"] = number(cert.p);
  j["P"] = Json::array({number(cert.P(0, 0)), number(cert.P(0, 1)), number(cert.P(1, 0)), number(cert.P(1, 1))});
  j["mu"] = number(cert.mu);
  j["feasible"] = cert.feasible;
  j["diagnostics"] = cert.diagnostics;
  return j;
}

Json audit_json(const AuditReport& report) {
  Json j;
  j["combination_residual"] = number(report.combination_residual);
  j["min_eig_P"] = number(report.min_eig_P);
  j["max_eig_M1"] = number(report.max_eig_M1);
  j["max_eig_M2"] = number(report.max_eig_M2);
  j["threshold_converged"] = report.threshold_converged;
  Json starts = Json::array();
  for (const auto& s : report.starts) {
    Json e;
    e["x0"] = vec(s.x0);
    e["argmin_error"] = number(s.argmin_error);
    e["argmin_monotone"] = s.argmin_monotone;
    e["threshold_error"] = number(s.threshold_error);
    e["threshold_converged"] = s.threshold_converged;
    starts.push_back(e);
  }
  j["starts"] = starts;
  return j;
}

std::string sobol_csv(const ParameterSpace& space, const SobolResult& r) {
  std::string out = "parameter,S,S_T,S_stderr,ST_stderr\n";
  for (int i = 0; i < space.dimension(); ++i)
    out += fmt::format("{},{},{},{},{}\n", space.names[i], g9(r.S(i)), g9(r.S_T(i)), g9(r.S_stderr(i)),
                       g9(r.ST_stderr(i)));
  return out;
}

Json sobol_json(const ParameterSpace& space, const SobolResult& r) {
  Json j;
  j["M"] = r.M;
  j["evaluations"] = r.evaluations;
  j["invalid_count"] = r.invalid_count;
  j["rows_used"] = r.rows_used;
  j["variance"] = number(r.variance);
  Json idx;
  for (int i = 0; i < space.dimension(); ++i)
    idx[space.names[i]] = {{"S", number(r.S(i))}, {"S_T", number(r.S_T(i))}};
  j["indices"] = idx;
  return j;
}

Json pso_json(const ParameterSpace& space, const PsoResult& r) {
  Json pos;
  for (int i = 0; i < space.dimension(); ++i) pos[space.names[i]] = number(r.best_position(i));
  Json j;
  j["best_position"] = pos;
  j["best_fitness"] = number(r.best_fitness);
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  return j;
}

std::string pso_history_csv(const PsoResult& r) {
  std::string out = "iter,best_fitness\n";
  for (std::size_t i = 0; i < r.history.size(); ++i) out += fmt::format("{},{}\n", i, g9(r.history[i]));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, fmt::format("write to '{}' failed", path));
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace switchstab
