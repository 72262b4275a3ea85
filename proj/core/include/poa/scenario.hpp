#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "poa/market.hpp"

namespace poa {

enum class OutputFormat { Csv, Jsonl };

struct ScenarioConfig {
  std::string id;
  std::map<std::string, double> params;  // unknown names are rejected
  std::uint64_t seed = 1;
  long trials = -1;  // -1: scenario default
  std::string out_dir = ".";
  OutputFormat format = OutputFormat::Csv;
};

/// How a row's estimate is judged against its target.
enum class Check {
  None,     // informational
  AbsTol,   // |estimate - target| <= tolerance
  RelTol,   // |estimate - target| <= tolerance * |target|
  AtMost,   // estimate <= target
  AtLeast,  // estimate >= target
};

struct MetricRow {
  std::string metric;
  double n = 0.0;  // market-size column
  double estimate = 0.0;
  double se = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  Check check = Check::None;
  bool pass = true;
};

MetricRow make_row(std::string metric, double n, double estimate, double se, Check check,
                   double target, double tolerance);

struct ScenarioResult {
  std::string id;
  std::vector<MetricRow> rows;
  double runtime_seconds = 0.0;

  bool ok() const;
  const MetricRow* find(const std::string& metric) const;
};

struct ParamSpec {
  std::string name;
  double fallback;
  std::string description;
};

struct ScenarioInfo {
  std::string id;
  std::string claim;  // what the scenario checks, with its target constants
  std::vector<ParamSpec> params;
  long default_trials;
};

const std::vector<ScenarioInfo>& scenario_registry();

/// Runs the scenario and returns its rows; throws std::invalid_argument on
/// unknown ids or parameter names and CapacityError from inner modules.
ScenarioResult compute_scenario(const ScenarioConfig& cfg);

/// compute + write <id>.csv/.jsonl and <id>_summary.txt under cfg.out_dir.
/// Returns 0 when every row passes, 1 otherwise; byte-identical outputs for
/// identical (config, seed).
int run_scenario(const ScenarioConfig& cfg);

std::string list_scenarios();
std::string list_scenarios(std::span<const ScenarioInfo> infos);

/// Flat key=value config file; errors cite the offending key and line.
ScenarioConfig parse_config_file(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);
std::string serialize_config(const ScenarioConfig& cfg);

std::string format_csv(const ScenarioResult& result);
std::string format_jsonl(const ScenarioResult& result, const ScenarioConfig& cfg);
std::string format_summary(const ScenarioResult& result, const ScenarioConfig& cfg);

}  // namespace poa
