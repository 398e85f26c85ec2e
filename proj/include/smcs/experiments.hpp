#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smcs/kernels.hpp"

namespace smcs::experiments {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { lgss, landscape, indoor, hmm_oracle };

[[nodiscard]] Experiment parse_experiment(std::string_view name);
[[nodiscard]] std::string experiment_name(Experiment e);

/// Fully resolved configuration of one run. Zero counts in a JSON file mean
/// "experiment default"; after resolve_config() every count is set.
struct ExperimentConfig {
  Experiment experiment = Experiment::lgss;
  std::size_t particles = 0;   // N
  std::size_t iterations = 0;  // K
  std::size_t draws = 0;       // M (FFBSi backward trajectories)
  std::optional<std::size_t> burn_in;  // stored trajectories; default K / 10
  std::size_t thinning = 1;
  std::uint64_t seed = 1;
  double level = 0.99;
  int threads = 0;
  Execution execution = Execution::parallel;
  std::filesystem::path output = "smcs-out";
  nlohmann::json model = nlohmann::json::object();  // model parameter overrides

  std::size_t budget = 0;            // landscape: sampled particles per method
  std::size_t filter_particles = 0;  // landscape: particle-filter N
  std::size_t ffbsi_particles = 0;   // landscape: FFBSi forward N
  double density_bin = 0.0;          // landscape: histogram bin width
  std::size_t output_stride = 0;     // indoor: time stride of chain.csv
  std::vector<std::size_t> checkpoints;  // K values for error/TV-vs-K curves

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Default configuration document for an experiment.
[[nodiscard]] nlohmann::json default_config(Experiment e);

/// Merges `file` and `key=value` overrides (dotted keys reach into objects,
/// values parse as JSON when possible) over the defaults, then validates.
/// A document with a top-level "config" object (a run manifest) is accepted.
[[nodiscard]] ExperimentConfig resolve_config(Experiment e, const nlohmann::json& file,
                                              const std::vector<std::string>& overrides = {});

struct ExperimentResult {
  nlohmann::ordered_json manifest;
  std::map<std::string, double> metrics;
};

/// Each runner writes its bundle into config.output and returns the manifest
/// (also written as manifest.json) plus headline metrics.
[[nodiscard]] ExperimentResult run_lgss(const ExperimentConfig& config);
[[nodiscard]] ExperimentResult run_landscape(const ExperimentConfig& config);
[[nodiscard]] ExperimentResult run_indoor(const ExperimentConfig& config);
[[nodiscard]] ExperimentResult run_hmm_oracle(const ExperimentConfig& config);
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config);

/// Manifest written when a run aborts; carries the config and the error.
/// Advisory notes for a resolved config, such as an expected long runtime.
[[nodiscard]] std::vector<std::string> config_warnings(const ExperimentConfig& config);

void write_failure_manifest(const ExperimentConfig& config, std::string_view kind,
                            std::string_view message, std::optional<std::size_t> time);

[[nodiscard]] std::string library_version();

}  // namespace smcs::experiments
