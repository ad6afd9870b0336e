#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "psgait/planner.hpp"
#include "psgait/sim.hpp"
#include "psgait/terrain.hpp"

namespace psgait {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to reproduce one closed-loop run.
struct ScenarioFile {
  int schema_version = kSchemaVersion;
  ScenarioConfig scenario;
  SimConfig sim;
  PendulumParams params;
  PlannerConfig planner;
};

/// Fully explicit document: every field present, defaults included.
nlohmann::json to_json(const ScenarioFile& file);

/// Strict parse: unknown keys and type mismatches raise ConfigError; absent keys take defaults.
ScenarioFile scenario_from_json(const nlohmann::json& doc);

ScenarioFile load_scenario(const std::string& path);

/// Sets a dotted key such as "sim.dt" or "scenario.seed". The key must exist
/// in the explicit document; the value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Parses "t=6,fx=-50,dur=0.3" (fy, fz optional).
Push parse_push(const std::string& text);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ScenarioFile preset(const std::string& name);
std::string describe_presets();

/// Trace columns: t, x, y, z, vx, vy, vz, lcom_x, lcom_y, xi_x, xi_y,
/// contact_x, contact_y, contact_z, side, step_index, active_kx, active_ky.
void write_trace_csv(std::ostream& os, const SimTrace& trace);
void write_events_csv(std::ostream& os, const SimTrace& trace);
nlohmann::json summary_json(const SimTrace& trace, const ScenarioFile& file);

/// "%.9g"
std::string format_number(double value);

}  // namespace psgait
