#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "switchstab/config.hpp"
#include "switchstab/error.hpp"
#include "switchstab/fixtures.hpp"

using namespace switchstab;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("switchstab_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SWITCHSTAB_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("bundled files match the built-in fixtures") {
    for (const auto& [name, fixture] : fixtures::all()) {
      CAPTURE(name);
      const fs::path path = fs::path(SWITCHSTAB_CONFIG_DIR) / (name + ".ini");
      REQUIRE(fs::exists(path));
      const RunConfig parsed = load_config(path.string());
      CHECK(format_config(parsed) == format_config(fixture));
      // formatted output parses back to the same values
      CHECK(format_config(parse(format_config(parsed))) == format_config(parsed));
    }
  }

  TEST_CASE("unknown keys are named") {
    CHECK(config_error("[params]\nK_px = 0.1\n").find("K_px") != std::string::npos);
    CHECK(config_error("K_px = 0.1\n").find("K_px") != std::string::npos);
    CHECK(config_error("[sim]\nstep = 0.1\n").find("step") != std::string::npos);
    CHECK(config_error("[nonsense]\na = 1\n").find("nonsense") != std::string::npos);
    CHECK(config_error("[space]\nK_px = 0, 1\n").find("K_px") != std::string::npos);
  }

  TEST_CASE("malformed values") {
    CHECK(config_error("[params]\nK_pd = fast\n").find("K_pd") != std::string::npos);
    CHECK(config_error("[sim]\nx0 = 1.0\n").find("x0") != std::string::npos);
    CHECK(config_error("[sim]\nlaw = random\n").find("law") != std::string::npos);
    CHECK(config_error("[space]\nK_pd = 0.2, 0.1\n").find("space") != std::string::npos);
    CHECK(config_error("[params]\ntarget_normal_voltage = 2\n").find("target_normal_voltage") != std::string::npos);
    CHECK(config_error("[space]\nK_pd = 0.1, 0.2\n[pso]\nsubset = K_id\n").find("K_id") != std::string::npos);
    config_error("[params\nK_pd = 1\n");
  }

  TEST_CASE("root-level keys and calibration") {
    const RunConfig cfg = parse("K_pd = 0.15\ntarget_normal_voltage = 0.9\n[sim]\nx0 = 0.5, -0.2\nlaw = fixed2\n");
    CHECK(cfg.params.K_pd == 0.15);
    CHECK(grid_voltage(cfg.params, Vec2d(cfg.params.I_d1, 0)) == doctest::Approx(0.9));
    CHECK(cfg.sim.x0 == Vec2d(0.5, -0.2));
    CHECK(cfg.sim.law == LawKind::Fixed2);
    CHECK_FALSE(cfg.seed.has_value());
  }
}

TEST_SUITE("cli") {
  TEST_CASE("simulate writes its outputs") {
    const fs::path out = scratch("simulate");
    const std::string cfg = (fs::path(SWITCHSTAB_CONFIG_DIR) / "nominal.ini").string();
    REQUIRE(run_cli("simulate --config " + cfg + " --out " + out.string(), out.string() + ".log") == 0);
    CHECK(fs::exists(out / "trajectory.csv"));
    CHECK(fs::exists(out / "events.csv"));
    const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
    CHECK(metrics["converged"] == false);
    CHECK(metrics["switch_count"].get<int>() > 10);
    const std::string traj = slurp(out / "trajectory.csv");
    CHECK(traj.rfind("t,i_d,i_q,sigma,v_g,P_g,Q_g\n", 0) == 0);
    CHECK(slurp(out / "events.csv").rfind("t_switch,from_mode,to_mode\n", 0) == 0);
  }

  TEST_CASE("stability writes a feasible certificate for the optimum") {
    const fs::path out = scratch("stability");
    const std::string cfg = (fs::path(SWITCHSTAB_CONFIG_DIR) / "optimum.ini").string();
    REQUIRE(run_cli("stability --config " + cfg + " --out " + out.string(), out.string() + ".log") == 0);
    const auto cert = nlohmann::json::parse(slurp(out / "certificate.json"));
    CHECK(cert["feasible"] == true);
    CHECK(cert["P"].size() == 4);
    for (const char* key : {"x_e", "lambda1", "p", "mu", "diagnostics"}) CHECK(cert.contains(key));
  }

  TEST_CASE("equilibria report") {
    const fs::path out = scratch("equilibria");
    REQUIRE(run_cli("equilibria --out " + out.string(), out.string() + ".log") == 0);
    const auto eq = nlohmann::json::parse(slurp(out / "equilibria.json"));
    REQUIRE(eq.size() == 2);
    CHECK(eq[0]["kind"] == "Virtual");
  }

  TEST_CASE("unknown key exits with status 1 and names it") {
    const fs::path dir = scratch("badkey");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.ini") << "[params]\nK_px = 0.1\n";
    const fs::path log = dir / "log.txt";
    CHECK(run_cli("simulate --config " + (dir / "bad.ini").string() + " --out " + dir.string(), log) == 1);
    CHECK(slurp(log).find("K_px") != std::string::npos);
  }

  TEST_CASE("inapplicable criterion exits with status 2") {
    const fs::path dir = scratch("nobracket");
    fs::create_directories(dir);
    std::ofstream(dir / "low.ini") << "[params]\nv_LVRT = 0.5\ntarget_normal_voltage = 0.79\n";
    CHECK(run_cli("stability --config " + (dir / "low.ini").string() + " --out " + dir.string(), dir / "log.txt") == 2);
  }

  TEST_CASE("randomized subcommands require a seed") {
    const fs::path dir = scratch("noseed");
    fs::create_directories(dir);
    std::ofstream(dir / "s.ini") << "[space]\nK_pd = 0.1, 0.2\nK_id = 1, 5\n[sobol]\nM = 16\n";
    CHECK(run_cli("sobol --config " + (dir / "s.ini").string() + " --out " + dir.string(), dir / "log.txt") == 1);
    CHECK(slurp(dir / "log.txt").find("seed") != std::string::npos);
    CHECK(run_cli("sobol --seed 3 --config " + (dir / "s.ini").string() + " --out " + dir.string(), dir / "log.txt") == 0);
    CHECK(fs::exists(dir / "sobol.csv"));
    CHECK(fs::exists(dir / "sobol.json"));
  }

  TEST_CASE("output directory from the environment") {
    const fs::path out = scratch("env");
    const std::string cmd = "SWITCHSTAB_OUT=" + out.string() + " " + SWITCHSTAB_CLI + " equilibria > /dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(out / "equilibria.json"));
  }

  TEST_CASE("reruns are byte-identical") {
    const fs::path a = scratch("idem_a");
    const fs::path b = scratch("idem_b");
    const std::string cfg = (fs::path(SWITCHSTAB_CONFIG_DIR) / "study.ini").string();
    for (const auto& dir : {a, b}) {
      REQUIRE(run_cli("pso --config " + cfg + " --max-iters 5 --out " + dir.string(), dir.string() + ".log") == 0);
      REQUIRE(run_cli("sobol --config " + cfg + " --M 32 --out " + dir.string(), dir.string() + ".log") == 0);
    }
    for (const char* f : {"pso.json", "pso_history.csv", "sobol.csv", "sobol.json"}) CHECK(slurp(a / f) == slurp(b / f));
  }
}
