#pragma once

// CSV and JSON writers for the analysis results.

#include <string>
#include <vector>

#include <json.hpp>

#include "switchstab/pso.hpp"
#include "switchstab/sensitivity.hpp"
#include "switchstab/stability.hpp"
#include "switchstab/switched_core.hpp"

namespace switchstab {

using Json = nlohmann::ordered_json;

std::string trajectory_csv(const Trajectoryd& traj);
std::string events_csv(const Trajectoryd& traj);
Json metrics_json(const OscillationMetrics<double>& m);
Json equilibria_json(const std::vector<EquilibriumReport<double>>& reports);
Json certificate_json(const StabilityCertificate& cert);
Json audit_json(const AuditReport& report);
std::string sobol_csv(const ParameterSpace& space, const SobolResult& r);
Json sobol_json(const ParameterSpace& space, const SobolResult& r);
Json pso_json(const ParameterSpace& space, const PsoResult& r);
std::string pso_history_csv(const PsoResult& r);

/// Creates parent directories; throws InvalidArgument when the file cannot be written.
void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const Json& j);

}  // namespace switchstab
