// Run configuration for the CLI: presets, JSON config files, flag overrides
// and the fully-resolved echo written next to every run.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moeagg/experiment.hpp"
#include "moeagg/simulation.hpp"

namespace moeagg::cli {

/// Invalid configuration; carries the offending field name.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error("invalid config: field '" + field + "': " + message),
          field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

struct RunConfig {
    std::optional<ScenarioSpec> scenario;
    std::optional<std::string> trace_path;
    std::string learner = "squint";
    double discount = 1.0;
    std::string loss = "probability";
    double beta = 10.0;
    double tau = 0.1;
    std::size_t topk = 10;
    std::size_t window = 500;
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> nll_exclude;
};

/// Named run configurations that work without further flags.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Merges a JSON config document over `config` (file values win).
void apply_config_file(RunConfig& config, const std::string& path);

/// Throws ConfigError on the first invalid field; materializes the seed
/// override into the scenario.
void finalize(RunConfig& config);

/// Fully-resolved configuration echo, sufficient to reproduce the run.
std::string echo_json(const RunConfig& config);

ExperimentConfig to_experiment_config(const RunConfig& config);

}  // namespace moeagg::cli
