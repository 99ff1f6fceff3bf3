#include "switchstab/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "switchstab/error.hpp"

namespace switchstab {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    config_error(fmt::format("key '{}': '{}' is not a number", key, text));
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    config_error(fmt::format("key '{}': '{}' is not an integer", key, text));
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  config_error(fmt::format("key '{}': '{}' is not a boolean", key, text));
}

std::pair<double, double> to_pair(const std::string& key, const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 2) config_error(fmt::format("key '{}': expected two comma-separated numbers", key));
  return {to_double(key, parts[0]), to_double(key, parts[1])};
}

void apply_param(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "target_normal_voltage") {
    cfg.target_normal_voltage = to_double(key, value);
    return;
  }
  if (!is_parameter_name(key)) config_error(fmt::format("unknown key '{}' in [params]", key));
  set_parameter(cfg.params, key, to_double(key, value));
}

void parse_sim(SimSettings& sim, const std::string& key, const std::string& value) {
  if (key == "x0") {
    const auto [a, b] = to_pair(key, value);
    sim.x0 = Vec2d(a, b);
  } else if (key == "sigma0") {
    sim.sigma0 = to_int<int>(key, value);
  } else if (key == "t_end") {
    sim.t_end = to_double(key, value);
  } else if (key == "dt") {
    sim.dt = to_double(key, value);
  } else if (key == "hysteresis") {
    sim.hysteresis = to_double(key, value);
  } else if (key == "dwell") {
    sim.dwell = to_double(key, value);
  } else if (key == "law") {
    const std::string v = trim(value);
    if (v == "threshold") sim.law = LawKind::Threshold;
    else if (v == "fixed1") sim.law = LawKind::Fixed1;
    else if (v == "fixed2") sim.law = LawKind::Fixed2;
    else if (v == "argmin") sim.law = LawKind::Argmin;
    else config_error(fmt::format("key 'law': unknown switching law '{}'", v));
  } else if (key == "integrator") {
    const std::string v = trim(value);
    if (v == "rk4") sim.integrator = Integrator::Rk4;
    else if (v == "exact") sim.integrator = Integrator::Exact;
    else config_error(fmt::format("key 'integrator': unknown integrator '{}'", v));
  } else {
    config_error(fmt::format("unknown key '{}' in [sim]", key));
  }
}

void parse_stability(StabilitySettings& s, const std::string& key, const std::string& value) {
  if (key == "mu_tolerance") s.mu_tolerance = to_double(key, value);
  else if (key == "report_negative") s.report_negative = to_bool(key, value);
  else if (key == "audit") s.audit = to_bool(key, value);
  else if (key == "audit_starts") s.audit_starts = to_int<int>(key, value);
  else config_error(fmt::format("unknown key '{}' in [stability]", key));
}

void parse_sobol(SobolSettings& s, const std::string& key, const std::string& value) {
  if (key == "M") {
    s.M = to_int<int>(key, value);
  } else if (key == "policy") {
    const std::string v = trim(value);
    if (v == "penalize") s.policy = InvalidPolicy::Penalize;
    else if (v == "exclude-row") s.policy = InvalidPolicy::ExcludeRow;
    else config_error(fmt::format("key 'policy': unknown policy '{}'", v));
  } else if (key == "penalty") {
    s.penalty = to_double(key, value);
  } else if (key == "skip") {
    s.skip = to_int<std::int64_t>(key, value);
  } else if (key == "bootstrap") {
    s.bootstrap = to_int<int>(key, value);
  } else {
    config_error(fmt::format("unknown key '{}' in [sobol]", key));
  }
}

void parse_pso(PsoSettings& s, const std::string& key, const std::string& value) {
  auto& c = s.cfg;
  if (key == "swarm_size") c.swarm_size = to_int<int>(key, value);
  else if (key == "max_iters") c.max_iters = to_int<int>(key, value);
  else if (key == "w_start") c.w_start = to_double(key, value);
  else if (key == "w_end") c.w_end = to_double(key, value);
  else if (key == "c1") c.c1 = to_double(key, value);
  else if (key == "c2") c.c2 = to_double(key, value);
  else if (key == "v_max_fraction") c.v_max_fraction = to_double(key, value);
  else if (key == "stall_tolerance") c.stall_tolerance = to_double(key, value);
  else if (key == "stall_window") c.stall_window = to_int<int>(key, value);
  else if (key == "subset") s.subset = split_list(value);
  else config_error(fmt::format("unknown key '{}' in [pso]", key));
}

const std::set<std::string> kSections{"params", "sim", "stability", "space", "frozen", "sobol", "pso", "run", "output"};

std::string law_name(LawKind law) { return to_string(law); }

}  // namespace

const char* to_string(LawKind law) {
  switch (law) {
    case LawKind::Threshold: return "threshold";
    case LawKind::Fixed1: return "fixed1";
    case LawKind::Fixed2: return "fixed2";
    case LawKind::Argmin: return "argmin";
  }
  return "?";
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(fmt::format("malformed config: {}", e.message()));
  }

  RunConfig cfg;
  std::vector<std::string> space_names;
  std::vector<double> lows;
  std::vector<double> highs;

  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      if (node.data().empty() && kSections.count(section)) continue;  // empty section
      apply_param(cfg, section, node.data());  // root-level key
      continue;
    }
    for (const auto& [key, child] : node) {
      const std::string& value = child.data();
      if (section == "params") {
        apply_param(cfg, key, value);
      } else if (section == "sim") {
        parse_sim(cfg.sim, key, value);
      } else if (section == "stability") {
        parse_stability(cfg.stability, key, value);
      } else if (section == "space") {
        if (!is_parameter_name(key)) config_error(fmt::format("unknown key '{}' in [space]", key));
        const auto [lo, hi] = to_pair(key, value);
        space_names.push_back(key);
        lows.push_back(lo);
        highs.push_back(hi);
      } else if (section == "frozen") {
        if (!is_parameter_name(key)) config_error(fmt::format("unknown key '{}' in [frozen]", key));
        cfg.space.frozen[key] = to_double(key, value);
      } else if (section == "sobol") {
        parse_sobol(cfg.sobol, key, value);
      } else if (section == "pso") {
        parse_pso(cfg.pso, key, value);
      } else if (section == "run") {
        if (key == "seed") cfg.seed = to_int<std::uint64_t>(key, value);
        else config_error(fmt::format("unknown key '{}' in [run]", key));
      } else if (section == "output") {
        if (key == "directory") cfg.output_directory = trim(value);
        else config_error(fmt::format("unknown key '{}' in [output]", key));
      } else {
        config_error(fmt::format("unknown section [{}]", section));
      }
    }
  }

  cfg.space.names = space_names;
  cfg.space.lows = Eigen::Map<Eigen::VectorXd>(lows.data(), static_cast<Eigen::Index>(lows.size()));
  cfg.space.highs = Eigen::Map<Eigen::VectorXd>(highs.data(), static_cast<Eigen::Index>(highs.size()));
  if (!space_names.empty()) {
    try {
      cfg.space.validate();
    } catch (const Error& e) {
      config_error(fmt::format("[space]: {}", e.what()));
    }
  }
  for (const auto& name : cfg.pso.subset)
    if (std::find(space_names.begin(), space_names.end(), name) == space_names.end())
      config_error(fmt::format("key 'subset': '{}' is not in [space]", name));
  if (cfg.target_normal_voltage) {
    try {
      cfg.params.v_G = calibrate_grid_voltage(cfg.params, *cfg.target_normal_voltage);
    } catch (const Error& e) {
      config_error(fmt::format("key 'target_normal_voltage': {}", e.what()));
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error(fmt::format("cannot open config '{}'", path));
  return parse_config(in);
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  auto line = [&out](std::string_view key, const std::string& value) { out += fmt::format("{} = {}\n", key, value); };
  auto num = [](double v) { return fmt::format("{}", v); };

  if (cfg.seed || !cfg.output_directory.empty()) {
    out += "[run]\n";
    if (cfg.seed) line("seed", fmt::format("{}", *cfg.seed));
    out += "\n";
    if (!cfg.output_directory.empty()) out += fmt::format("[output]\ndirectory = {}\n\n", cfg.output_directory);
  }

  out += "[params]\n";
  for (const auto& name : parameter_names()) {
    if (name == "v_G" && cfg.target_normal_voltage) continue;
    line(name, num(get_parameter(cfg.params, name)));
  }
  if (cfg.target_normal_voltage) line("target_normal_voltage", num(*cfg.target_normal_voltage));

  const auto& s = cfg.sim;
  out += "\n[sim]\n";
  line("x0", fmt::format("{}, {}", s.x0(0), s.x0(1)));
  line("sigma0", fmt::format("{}", s.sigma0));
  line("t_end", num(s.t_end));
  line("dt", num(s.dt));
  line("hysteresis", num(s.hysteresis));
  line("dwell", num(s.dwell));
  line("law", law_name(s.law));
  line("integrator", s.integrator == Integrator::Rk4 ? "rk4" : "exact");

  out += "\n[stability]\n";
  line("mu_tolerance", num(cfg.stability.mu_tolerance));
  line("report_negative", cfg.stability.report_negative ? "true" : "false");
  line("audit", cfg.stability.audit ? "true" : "false");
  line("audit_starts", fmt::format("{}", cfg.stability.audit_starts));

  if (cfg.space.dimension() > 0) {
    out += "\n[space]\n";
    for (int i = 0; i < cfg.space.dimension(); ++i)
      line(cfg.space.names[i], fmt::format("{}, {}", cfg.space.lows(i), cfg.space.highs(i)));
  }
  if (!cfg.space.frozen.empty()) {
    out += "\n[frozen]\n";
    for (const auto& [name, value] : cfg.space.frozen) line(name, num(value));
  }

  const auto& so = cfg.sobol;
  out += "\n[sobol]\n";
  line("M", fmt::format("{}", so.M));
  line("policy", so.policy == InvalidPolicy::Penalize ? "penalize" : "exclude-row");
  line("penalty", num(so.penalty));
  line("skip", fmt::format("{}", so.skip));
  line("bootstrap", fmt::format("{}", so.bootstrap));

  const auto& c = cfg.pso.cfg;
  out += "\n[pso]\n";
  line("swarm_size", fmt::format("{}", c.swarm_size));
  line("max_iters", fmt::format("{}", c.max_iters));
  line("w_start", num(c.w_start));
  line("w_end", num(c.w_end));
  line("c1", num(c.c1));
  line("c2", num(c.c2));
  line("v_max_fraction", num(c.v_max_fraction));
  line("stall_tolerance", num(c.stall_tolerance));
  line("stall_window", fmt::format("{}", c.stall_window));
  if (!cfg.pso.subset.empty()) line("subset", fmt::format("{}", fmt::join(cfg.pso.subset, ", ")));
  return out;
}

WtGscParams resolved_params(const RunConfig& cfg) {
  WtGscParams p = cfg.params;
  if (cfg.target_normal_voltage) p.v_G = calibrate_grid_voltage(p, *cfg.target_normal_voltage);
  return p;
}

SwitchedSystemd build_system(const RunConfig& cfg) {
  const WtGscParams p = resolved_params(cfg);
  validate(p);
  SwitchedSystemd sys = make_wtgsc_system(p, {cfg.sim.hysteresis, cfg.sim.dwell});
  switch (cfg.sim.law) {
    case LawKind::Threshold: return sys;
    case LawKind::Fixed1: return sys.with_law(FixedMode{1});
    case LawKind::Fixed2: return sys.with_law(FixedMode{2});
    case LawKind::Argmin: {
      const auto cert = max_stability_index(p, {cfg.stability.mu_tolerance, cfg.stability.report_negative});
      if (!cert.feasible)
        throw Error(ErrorCode::InvalidArgument, "argmin law needs a feasible stability certificate");
      return argmin_system(sys, cert);
    }
  }
  return sys;
}

}  // namespace switchstab
