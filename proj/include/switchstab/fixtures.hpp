#pragma once

// Bundled parameter groups. Each has a matching file under configs/.

#include <string>
#include <utility>
#include <vector>

#include "switchstab/config.hpp"

namespace switchstab::fixtures {

/// Default parameters, normal equilibrium calibrated to 0.79 p.u., hysteresis 0.03.
RunConfig nominal();
/// Baseline held in normal mode.
RunConfig blocked_lvrt();
/// K_pd = K_pq = 0.15 with a 0.05 hysteresis band.
RunConfig continuous_lvrt();
/// Optimized parameter group.
RunConfig optimum();
/// Eight-parameter sampling box.
ParameterSpace study_space();
/// Baseline plus the sampling box, Sobol' and swarm settings.
RunConfig study();
/// study with the swarm restricted to K_pd, K_id, K_iq and L_g.
RunConfig dominant_subset();

/// (name, config) for every bundled fixture; the name is also the config file stem.
std::vector<std::pair<std::string, RunConfig>> all();

}  // namespace switchstab::fixtures
