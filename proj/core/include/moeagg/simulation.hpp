/**
 * @file simulation.hpp
 * @brief Synthetic scenario generation for expert-aggregation experiments.
 *
 * A scenario is a stream of independent prediction scenes. Each scene rolls a
 * unicycle-style ground-truth trajectory and has every expert predict it with
 * a controllable noise scale (its "quality" in the active regime, smaller is
 * better). Regime boundaries change the quality vector, modeling distribution
 * shifts at known steps so adaptation behavior can be verified.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "moeagg/gmm.hpp"
#include "moeagg/metrics.hpp"
#include "moeagg/sampling.hpp"

namespace moeagg {

/// Ground-truth generator parameters.
struct TruthProcess {
    double base_speed = 0.3;     // meters per step
    double turn_rate = 0.05;     // max |heading change| per step (radians)
    double process_noise = 0.02; // positional noise std per step (meters)
    /// Scenes differ in how predictable they are: every expert's noise scale
    /// is multiplied by a per-step factor drawn log-uniform from
    /// [1, difficulty_range] (1, the default, disables the variation). The
    /// factor is shared across experts, so quality ordering and calibration
    /// are preserved.
    double difficulty_range = 1.0;
};

/// A contiguous segment of the stream with a fixed expert-quality vector.
struct RegimeSpec {
    std::size_t start_step = 0;
    std::vector<double> expert_quality;  // noise multiplier per expert, > 0
    TruthProcess truth_process;
};

enum class ExpertOutputKind { gmm, samples };

struct ScenarioSpec {
    std::size_t n_experts = 2;
    std::size_t n_modes = 1;   // L, modes per GMM expert
    std::size_t horizon = 1;   // K
    std::size_t total_steps = 1;
    std::vector<RegimeSpec> regimes;
    std::uint64_t rng_seed = 0;
    ExpertOutputKind output_kind = ExpertOutputKind::gmm;
    std::size_t samples_per_expert = 32;  // M, for sample-emitting experts
    /// Experts that emit unit precision regardless of their actual noise
    /// (uncalibrated predictors; exclude them from NLL evaluation).
    std::vector<std::size_t> flat_precision_experts;

    void validate() const;  // throws std::invalid_argument naming the field
};

/// One stream element: the revealed state, the true future and one prediction
/// per expert (a GMM or a sample set).
struct StepRecord {
    std::size_t t = 0;
    AgentState truth;
    GroundTruthFuture future;
    std::vector<std::variant<ExpertPrediction, SampleSet>> experts;
};

/// Pull-based record stream shared by the generator and the trace reader.
class StepSource {
  public:
    virtual ~StepSource() = default;
    virtual std::optional<StepRecord> next() = 0;
};

/// Deterministic synthetic stream; identical seeds give bit-identical records.
class ScenarioStream final : public StepSource {
  public:
    explicit ScenarioStream(ScenarioSpec spec);
    std::optional<StepRecord> next() override;

    const ScenarioSpec& spec() const noexcept { return spec_; }

  private:
    ScenarioSpec spec_;
    std::mt19937_64 rng_;
    std::size_t step_ = 0;
};

ScenarioStream generate_scenario(ScenarioSpec spec);

/// Materializes a whole stream (convenience for tests and small runs).
std::vector<StepRecord> collect_steps(StepSource& source);

}  // namespace moeagg
