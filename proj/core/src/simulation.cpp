#include "moeagg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moeagg {

namespace {

// Expert noise at quality 1.0, first prediction step. Uncertainty grows 25%
// per step along the horizon; precisions mirror the generating noise so a
// well-matched expert is also well-calibrated.
constexpr double kBasePositionNoise = 0.5;   // meters
constexpr double kBaseHeadingNoise = 0.1;    // radians
constexpr double kHorizonGrowth = 0.25;
constexpr double kOnTargetModeWeight = 0.6;
constexpr double kLaneOffset = 1.75;         // meters, decoy lateral spacing

void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace

void ScenarioSpec::validate() const {
    require(total_steps >= 1, "ScenarioSpec: total_steps must be >= 1");
    require(horizon >= 1, "ScenarioSpec: horizon must be >= 1");
    require(n_modes >= 1, "ScenarioSpec: n_modes must be >= 1");
    require(n_experts >= 2, "ScenarioSpec: n_experts must be >= 2");
    require(!regimes.empty(), "ScenarioSpec: regimes must not be empty");
    require(regimes.front().start_step == 0, "ScenarioSpec: regimes must start at step 0");
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        if (r > 0) {
            require(regimes[r].start_step > regimes[r - 1].start_step,
                    "ScenarioSpec: regimes must have strictly increasing start_step");
        }
        require(regimes[r].expert_quality.size() == n_experts,
                "ScenarioSpec: regimes expert_quality length must equal n_experts");
        for (double quality : regimes[r].expert_quality) {
            require(std::isfinite(quality) && quality > 0.0,
                    "ScenarioSpec: regimes expert_quality entries must be positive");
        }
        require(regimes[r].truth_process.base_speed > 0.0,
                "ScenarioSpec: regimes truth_process base_speed must be positive");
        require(regimes[r].truth_process.difficulty_range >= 1.0,
                "ScenarioSpec: regimes truth_process difficulty_range must be >= 1");
    }
    if (output_kind == ExpertOutputKind::samples)
        require(samples_per_expert >= 1, "ScenarioSpec: samples_per_expert must be >= 1");
    for (std::size_t index : flat_precision_experts)
        require(index < n_experts, "ScenarioSpec: flat_precision_experts index out of range");
}

ScenarioStream::ScenarioStream(ScenarioSpec spec) : spec_(std::move(spec)), rng_(spec_.rng_seed) {
    spec_.validate();
}

ScenarioStream generate_scenario(ScenarioSpec spec) { return ScenarioStream(std::move(spec)); }

std::optional<StepRecord> ScenarioStream::next() {
    if (step_ >= spec_.total_steps) return std::nullopt;

    // Active regime: last one whose start_step is <= the current step.
    const RegimeSpec* regime = &spec_.regimes.front();
    for (const auto& candidate : spec_.regimes) {
        if (candidate.start_step <= step_) regime = &candidate;
    }
    const TruthProcess& process = regime->truth_process;

    std::uniform_real_distribution<double> heading_draw(-kPi, kPi);
    std::uniform_real_distribution<double> turn_draw(-process.turn_rate, process.turn_rate);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    // Each step is an independent scene: a fresh unicycle rollout from the
    // local origin.
    const double initial_heading = heading_draw(rng_);
    const double turn_rate = turn_draw(rng_);
    const double speed = std::max(0.1 * process.base_speed,
                                  process.base_speed * (1.0 + 0.1 * unit_normal(rng_)));
    // Per-scene predictability factor, shared by every expert.
    double difficulty = 1.0;
    if (process.difficulty_range > 1.0) {
        std::uniform_real_distribution<double> log_difficulty(
            0.0, std::log(process.difficulty_range));
        difficulty = std::exp(log_difficulty(rng_));
    }

    StepRecord record;
    record.t = step_;
    record.future.states.reserve(spec_.horizon);
    double x = 0.0, y = 0.0, heading = initial_heading;
    for (std::size_t step = 0; step < spec_.horizon; ++step) {
        heading += turn_rate;
        x += speed * std::cos(heading) + process.process_noise * unit_normal(rng_);
        y += speed * std::sin(heading) + process.process_noise * unit_normal(rng_);
        record.future.states.emplace_back(x, y, heading);
    }
    record.truth = record.future.states.front();

    const double lateral_x = -std::sin(initial_heading);
    const double lateral_y = std::cos(initial_heading);

    record.experts.reserve(spec_.n_experts);
    for (std::size_t i = 0; i < spec_.n_experts; ++i) {
        const double quality = regime->expert_quality[i];
        const bool flat_precision =
            std::find(spec_.flat_precision_experts.begin(), spec_.flat_precision_experts.end(),
                      i) != spec_.flat_precision_experts.end();

        if (spec_.output_kind == ExpertOutputKind::samples) {
            std::vector<std::vector<AgentState>> samples(spec_.samples_per_expert);
            for (auto& trajectory : samples) {
                trajectory.reserve(spec_.horizon);
                for (std::size_t step = 0; step < spec_.horizon; ++step) {
                    const double growth = 1.0 + kHorizonGrowth * static_cast<double>(step);
                    const double sigma_pos = quality * difficulty * kBasePositionNoise * growth;
                    const double sigma_heading =
                        quality * difficulty * kBaseHeadingNoise * growth;
                    const AgentState& target = record.future.states[step];
                    trajectory.emplace_back(target.x + sigma_pos * unit_normal(rng_),
                                            target.y + sigma_pos * unit_normal(rng_),
                                            target.theta + sigma_heading * unit_normal(rng_));
                }
            }
            record.experts.emplace_back(SampleSet(std::move(samples)));
            continue;
        }

        std::vector<GaussianMode> modes;
        modes.reserve(spec_.n_modes);
        for (std::size_t j = 0; j < spec_.n_modes; ++j) {
            // Mode 0 tracks the true future; the rest are lane-change-style
            // decoys offset laterally, ramping in over the horizon.
            const double magnitude = kLaneOffset * static_cast<double>((j + 1) / 2);
            const double offset = (j % 2 == 1) ? magnitude : -magnitude;
            const double weight =
                spec_.n_modes == 1
                    ? 1.0
                    : (j == 0 ? kOnTargetModeWeight
                              : (1.0 - kOnTargetModeWeight) / static_cast<double>(spec_.n_modes - 1));

            std::vector<AgentState> mean;
            std::vector<std::array<double, 3>> precision;
            mean.reserve(spec_.horizon);
            precision.reserve(spec_.horizon);
            for (std::size_t step = 0; step < spec_.horizon; ++step) {
                const double growth = 1.0 + kHorizonGrowth * static_cast<double>(step);
                const double sigma_pos = quality * difficulty * kBasePositionNoise * growth;
                const double sigma_heading = quality * difficulty * kBaseHeadingNoise * growth;
                const double ramp =
                    static_cast<double>(step + 1) / static_cast<double>(spec_.horizon);
                const AgentState& target = record.future.states[step];
                mean.emplace_back(target.x + offset * lateral_x * ramp + sigma_pos * unit_normal(rng_),
                                  target.y + offset * lateral_y * ramp + sigma_pos * unit_normal(rng_),
                                  target.theta + sigma_heading * unit_normal(rng_));
                if (flat_precision) {
                    precision.push_back({1.0, 1.0, 1.0});
                } else {
                    precision.push_back({1.0 / (sigma_pos * sigma_pos),
                                         1.0 / (sigma_pos * sigma_pos),
                                         1.0 / (sigma_heading * sigma_heading)});
                }
            }
            modes.emplace_back(std::move(mean), std::move(precision), weight);
        }
        record.experts.emplace_back(
            ExpertPrediction(std::move(modes), "expert_" + std::to_string(i)));
    }

    ++step_;
    return record;
}

std::vector<StepRecord> collect_steps(StepSource& source) {
    std::vector<StepRecord> records;
    while (auto record = source.next()) records.push_back(std::move(*record));
    return records;
}

}  // namespace moeagg
