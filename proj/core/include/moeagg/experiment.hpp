/**
 * @file experiment.hpp
 * @brief The end-to-end online aggregation loop.
 *
 * Per step: build the mixture from the current alpha, score the mixture and
 * every singular expert on the evaluation metrics, evaluate the configured
 * loss, and advance the learner with its gradient. Everything observable is
 * logged so runs can be analyzed or reproduced bit-exactly.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moeagg/learners.hpp"
#include "moeagg/losses.hpp"
#include "moeagg/metrics.hpp"
#include "moeagg/simulation.hpp"

namespace moeagg {

/// Learner state went non-finite; carries the 1-based step index.
class NumericalError : public std::runtime_error {
  public:
    NumericalError(std::size_t step, const std::string& message);
    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

enum class LossKind { probability, soft_min_frde, sample_mse, sample_topk };

struct MetricConfig {
    std::size_t window = 500;
    std::size_t top_k = 10;  // clamped to the component count per distribution
    /// Experts excluded from NLL evaluation (uncalibrated predictors). The
    /// mixture NLL renormalizes alpha over the remaining experts.
    std::vector<std::size_t> nll_exclude;
};

struct ExperimentConfig {
    LearnerConfig learner;
    LossKind loss = LossKind::probability;
    SmoothingConfig smoothing;     // soft_min_frde parameters; k doubles as
                                   // the sample_topk count
    MetricConfig metrics;
    /// When set, learning is disabled and this alpha is played every step.
    std::optional<WeightVector> freeze_alpha;
};

struct ExperimentResult {
    std::size_t steps = 0;
    std::size_t n_experts = 0;

    std::vector<std::vector<double>> alpha_history;   // steps+1 rows of N
    std::vector<double> loss_value;                   // actual loss per step
    std::vector<double> linearized_loss;              // dot(alpha, gradient)
    std::vector<std::vector<double>> expert_losses;   // raw gradient per step
    std::vector<std::vector<double>> clipped_expert_losses;
    std::vector<std::vector<double>> raw_regret;      // cumulative, per step
    std::vector<std::vector<double>> clipped_regret;  // cumulative, per step
    std::vector<std::size_t> best_so_far;             // argmin cumulative raw loss
    std::vector<std::size_t> window_best;             // argmin windowed raw loss

    /// Keyed "<metric>/<entity>" with entity "moe" or "expert_<i>".
    std::map<std::string, MetricSeries> metric_series;
    std::map<std::string, std::size_t> nll_floor_counts;

    LearnerState final_state{WeightVector::uniform(1)};

    /// First step index (1-based) at which alpha[expert] >= threshold, if any.
    std::optional<std::size_t> steps_to_threshold(std::size_t expert,
                                                  double threshold) const;
    /// Expert with minimum cumulative raw loss over the whole run.
    std::size_t hindsight_best() const;
};

ExperimentResult run_experiment(StepSource& source, const ExperimentConfig& config);

/// Writes alpha.csv, losses.csv, regret.csv, one CSV per metric series,
/// summary.json and the caller's fully-resolved config echo as config.json.
void write_result(const ExperimentResult& result, const std::filesystem::path& out_dir,
                  const std::string& config_echo_json);

}  // namespace moeagg
