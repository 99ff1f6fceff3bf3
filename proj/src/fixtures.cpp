#include "switchstab/fixtures.hpp"

namespace switchstab::fixtures {

RunConfig nominal() {
  RunConfig cfg;
  cfg.target_normal_voltage = 0.79;
  cfg.params.v_G = calibrate_grid_voltage(cfg.params, 0.79);
  cfg.sim.hysteresis = 0.03;
  cfg.seed = 2024;
  return cfg;
}

RunConfig blocked_lvrt() {
  RunConfig cfg = nominal();
  cfg.sim.law = LawKind::Fixed1;
  return cfg;
}

RunConfig continuous_lvrt() {
  RunConfig cfg = nominal();
  cfg.params.K_pd = 0.15;
  cfg.params.K_pq = 0.15;
  cfg.sim.hysteresis = 0.05;
  return cfg;
}

RunConfig optimum() {
  RunConfig cfg = nominal();
  auto& p = cfg.params;
  p.K_pd = 0.2;
  p.K_pq = 0.1;
  p.K_id = 5.0;
  p.K_iq = 5.0;
  p.K_1 = 1.68;
  p.L_g = 3.25e-4;
  p.R = 1.2e-3;
  p.L = 8.66e-4;
  p.v_G = calibrate_grid_voltage(p, 0.79);
  return cfg;
}

ParameterSpace study_space() {
  ParameterSpace s;
  s.names = {"K_pd", "K_pq", "K_id", "K_iq", "K_1", "L_g", "R", "L"};
  s.lows.resize(8);
  s.highs.resize(8);
  s.lows << 0.1, 0.1, 1.0, 1.0, 1.5, 3.25e-4, 2.17e-4, 8.66e-4;
  s.highs << 0.2, 0.2, 5.0, 5.0, 3.0, 5.41e-4, 4.5e-3, 1.1e-3;
  return s;
}

RunConfig study() {
  RunConfig cfg = nominal();
  cfg.space = study_space();
  return cfg;
}

RunConfig dominant_subset() {
  RunConfig cfg = study();
  cfg.pso.subset = {"K_pd", "K_id", "K_iq", "L_g"};
  return cfg;
}

std::vector<std::pair<std::string, RunConfig>> all() {
  return {{"nominal", nominal()},
          {"blocked_lvrt", blocked_lvrt()},
          {"continuous_lvrt", continuous_lvrt()},
          {"optimum", optimum()},
          {"study", study()},
          {"dominant_subset", dominant_subset()}};
}

}  // namespace switchstab::fixtures
