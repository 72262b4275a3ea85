#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poa/market.hpp"
#include "poa/scenario.hpp"
#include "poa/version.hpp"

namespace {

int parse_kv(const std::string& kv, std::string& key, double& value) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) return 1;
  key = kv.substr(0, eq);
  try {
    std::size_t used = 0;
    value = std::stod(kv.substr(eq + 1), &used);
    if (used != kv.size() - eq - 1) return 1;
  } catch (const std::exception&) {
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(poa::kVersion) + " - market game experiments"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "list scenarios, parameters and defaults");

  auto* run = app.add_subcommand("run", "run one scenario and write its result tables");
  std::string scenario_id;
  std::vector<std::string> kv_params;
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  std::uint64_t seed = 1;
  long trials = -1;
  run->add_option("scenario", scenario_id, "scenario id (see `list`)");
  run->add_option("--param", kv_params, "scenario parameter as key=value (repeatable)");
  run->add_option("--config", config_path, "flat key=value config file");
  run->add_option("--seed", seed, "random seed");
  run->add_option("--trials", trials, "Monte Carlo trials (scenario default if omitted)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--format", format, "table format: csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    std::fputs(poa::list_scenarios().c_str(), stdout);
    return 0;
  }

  try {
    poa::ScenarioConfig cfg;
    if (!config_path.empty()) cfg = poa::parse_config_file(config_path);
    if (!scenario_id.empty()) cfg.id = scenario_id;
    if (cfg.id.empty()) {
      std::fputs("error: no scenario given (positional argument or config file)\n", stderr);
      return 2;
    }
    for (const std::string& kv : kv_params) {
      std::string key;
      double value = 0.0;
      if (parse_kv(kv, key, value) != 0) {
        std::fprintf(stderr, "error: bad --param '%s' (expected key=value)\n", kv.c_str());
        return 2;
      }
      cfg.params[key] = value;
    }
    if (run->count("--seed") > 0) cfg.seed = seed;
    if (run->count("--trials") > 0) cfg.trials = trials;
    if (run->count("--out") > 0) cfg.out_dir = out_dir;
    if (run->count("--format") > 0)
      cfg.format = format == "jsonl" ? poa::OutputFormat::Jsonl : poa::OutputFormat::Csv;

    const int status = poa::run_scenario(cfg);
    std::fprintf(stdout, "%s: wrote %s/%s.%s and %s/%s_summary.txt (%s)\n", cfg.id.c_str(),
                 cfg.out_dir.c_str(), cfg.id.c_str(),
                 cfg.format == poa::OutputFormat::Csv ? "csv" : "jsonl", cfg.out_dir.c_str(),
                 cfg.id.c_str(), status == 0 ? "all checks passed" : "some checks failed");
    return status;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const poa::CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
