#pragma once

// The fixed catalog of experiments. Each scenario runs a configured
// pipeline, computes named metrics and compares them with thresholds.
// Scenarios in the vanishing-Q class must agree with exact quantum
// dynamics; free_gaussian must disagree, and asserts that it does.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpot {

/// Unknown scenario, malformed override, or a configuration the pipeline
/// rejects before any result exists.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical failure while running a well-formed scenario.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogEntry {
  std::string name;
  std::string category;  ///< vanishing_q, nonzero_q or circular
  std::string description;
  std::string anchor;    ///< section label and the quoted phrase it illustrates
};

const std::vector<CatalogEntry>& list_scenarios();
nlohmann::json to_json(const CatalogEntry& e);
CatalogEntry catalog_entry_from_json(const nlohmann::json& j);

/// A scenario's parameters as a JSON document with fixed sections (grid,
/// constants, potential, initial, time, ...) and a thresholds map
/// metric -> {"op": "<" | ">", "value": number}.
struct ScenarioConfig {
  std::string name;
  nlohmann::json doc;
};

ScenarioConfig default_config(const std::string& name);
/// `dotted.key=value`. The key must already exist and the value must keep
/// its JSON type; numbers may be written in any JSON-compatible form.
void apply_override(ScenarioConfig& cfg, const std::string& assignment);
void validate(const ScenarioConfig& cfg);
/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

struct Check {
  std::string metric;
  std::string op;
  double threshold = 0.0;
  double value = 0.0;
  bool pass = false;
};

struct ScenarioReport {
  std::string name;
  std::string anchor;
  nlohmann::json provenance;
  std::map<std::string, double> metrics;
  std::vector<Check> checks;  ///< in metric name order
  bool pass = false;
  /// Field dumps, file name -> CSV text.
  std::map<std::string, std::string> artifacts;

  std::vector<std::string> failures() const;
};

ScenarioReport run_scenario(const ScenarioConfig& cfg);
ScenarioReport run_scenario(const std::string& name, const std::vector<std::string>& overrides = {});
/// Every catalog scenario, run concurrently, returned in catalog order.
/// Overrides are applied to every scenario that has the key.
std::vector<ScenarioReport> run_all(const std::vector<std::string>& overrides = {});

nlohmann::json to_json(const ScenarioReport& r);
/// `scenario,metric,value,threshold,pass`, one row per check.
std::string to_csv(const std::vector<ScenarioReport>& reports);

}  // namespace qpot
