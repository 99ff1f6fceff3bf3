#pragma once

// INI run configuration shared by the CLI and the bundled fixtures.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "switchstab/pso.hpp"
#include "switchstab/sensitivity.hpp"
#include "switchstab/stability.hpp"
#include "switchstab/switched_core.hpp"
#include "switchstab/wtgsc_model.hpp"

namespace switchstab {

enum class LawKind { Threshold, Fixed1, Fixed2, Argmin };

struct SimSettings {
  Vec2d x0 = Vec2d(1.0, 0.0);
  int sigma0 = 1;
  double t_end = 2.0;
  double dt = 1e-4;
  double hysteresis = 0.0;
  double dwell = 0.0;
  LawKind law = LawKind::Threshold;
  Integrator integrator = Integrator::Rk4;
};

struct StabilitySettings {
  double mu_tolerance = 1e-6;
  bool report_negative = true;
  bool audit = false;
  int audit_starts = 20;
};

struct SobolSettings {
  int M = 1024;
  InvalidPolicy policy = InvalidPolicy::Penalize;
  double penalty = -50.0;
  std::int64_t skip = 0;
  int bootstrap = 100;
};

struct PsoSettings {
  PsoConfig cfg;
  /// Names varied by the swarm; empty means the whole space.
  std::vector<std::string> subset;
};

struct RunConfig {
  WtGscParams params;
  /// When set, v_G is recalibrated so the normal equilibrium sits at this voltage.
  std::optional<double> target_normal_voltage;
  ParameterSpace space;
  SimSettings sim;
  StabilitySettings stability;
  SobolSettings sobol;
  PsoSettings pso;
  std::string output_directory;
  /// Seed for every randomized stage; randomized subcommands refuse to run without one.
  std::optional<std::uint64_t> seed;
};

/// Parses INI text; throws ConfigError naming the offending key or section.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Writes a config that parses back to the same values.
std::string format_config(const RunConfig& cfg);

/// Parameters with the voltage calibration applied.
WtGscParams resolved_params(const RunConfig& cfg);

/// Threshold-law system (or the configured alternative law) for simulation.
SwitchedSystemd build_system(const RunConfig& cfg);

const char* to_string(LawKind law);

}  // namespace switchstab
