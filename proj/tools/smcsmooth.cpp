// Experiment runner. Exit codes: 0 success, 2 configuration error,
// 3 numerical degeneracy (a failure manifest is written first), 1 otherwise.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smcs/experiments.hpp"
#include "smcs/model.hpp"
#include "smcs/oracles.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw smcs::experiments::ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw smcs::experiments::ConfigError("config file " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  namespace ex = smcs::experiments;

  CLI::App app{"Sequential Monte Carlo smoothing experiments"};
  app.set_version_flag("--version", ex::library_version());
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  app.add_option("experiment", experiment, "lgss | landscape | indoor | hmm-oracle")->required();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Run seed");
  app.add_option("--out", out, "Output directory");
  app.add_option("--threads", threads, "Worker thread cap (0 = runtime default)");
  app.add_option("--override", overrides, "key=value, dotted keys reach into 'model'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ex::ExperimentConfig config;
  try {
    const auto kind = ex::parse_experiment(experiment);
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (out) overrides.push_back("output=" + nlohmann::json(*out).dump());
    if (threads) overrides.push_back("threads=" + std::to_string(*threads));
    config = ex::resolve_config(kind, load_config(config_path), overrides);
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto result = ex::run_experiment(config);
    for (const auto& [name, value] : result.metrics) std::cout << name << ' ' << value << '\n';
    return 0;
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const smcs::DegenerateWeightsError& e) {
    std::cerr << "degenerate weights: " << e.what() << '\n';
    try {
      ex::write_failure_manifest(config, "degenerate_weights", e.what(),
                                 e.time() ? std::optional(e.time()) : std::nullopt);
    } catch (const std::exception& w) {
      std::cerr << "could not write failure manifest: " << w.what() << '\n';
    }
    return kExitDegenerate;
  } catch (const smcs::OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    try {
      ex::write_failure_manifest(config, "oracle", e.what(), std::nullopt);
    } catch (const std::exception& w) {
      std::cerr << "could not write failure manifest: " << w.what() << '\n';
    }
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
