#include "moeagg/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace moeagg {

NumericalError::NumericalError(std::size_t step, const std::string& message)
    : std::runtime_error("step " + std::to_string(step) + ": " + message), step_(step) {}

namespace {

double dot(const WeightVector& alpha, std::span<const double> values) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) total += alpha[i] * values[i];
    return total;
}

std::size_t argmin(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

std::size_t clamp_k(std::size_t k, std::size_t n_components) {
    return std::max<std::size_t>(1, std::min(k, n_components));
}

struct MetricAccumulator {
    std::map<std::string, MetricSeries> series;
    std::map<std::string, std::size_t> floor_counts;

    void push(const std::string& metric, std::size_t k, const std::string& entity,
              double value) {
        MetricSeries& target = series[metric + "/" + entity];
        if (target.raw.empty()) {
            target.name = metric;
            target.k = k;
        }
        target.raw.push_back(value);
    }
};

/// Mixture NLL with some experts masked out: alpha is renormalized over the
/// remaining experts (uniform over them if it carries no mass there).
double masked_nll(std::span<const ExpertPrediction> predictions, const WeightVector& alpha,
                  const std::vector<std::size_t>& exclude, const AgentState& truth,
                  bool* floored, bool* skipped) {
    std::vector<ExpertPrediction> kept;
    std::vector<double> kept_alpha;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
        kept.push_back(predictions[i]);
        kept_alpha.push_back(alpha[i]);
    }
    if (kept.empty()) {
        *skipped = true;
        return 0.0;
    }
    *skipped = false;
    double mass = 0.0;
    for (double a : kept_alpha) mass += a;
    if (mass <= 0.0) {
        kept_alpha.assign(kept.size(), 1.0 / static_cast<double>(kept.size()));
    } else {
        for (double& a : kept_alpha) a /= mass;
    }
    const MoeDistribution moe = build_moe(kept, WeightVector(std::move(kept_alpha)), true);
    return nll(moe, truth, floored);
}

void append_shortest(std::string& out, double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    out.append(buffer, result.ptr);
}

}  // namespace

std::optional<std::size_t> ExperimentResult::steps_to_threshold(std::size_t expert,
                                                                double threshold) const {
    for (std::size_t row = 1; row < alpha_history.size(); ++row) {
        if (alpha_history[row][expert] >= threshold) return row;
    }
    return std::nullopt;
}

std::size_t ExperimentResult::hindsight_best() const {
    std::vector<double> totals(n_experts, 0.0);
    for (const auto& losses : expert_losses)
        for (std::size_t i = 0; i < losses.size(); ++i) totals[i] += losses[i];
    return argmin(totals);
}

ExperimentResult run_experiment(StepSource& source, const ExperimentConfig& config) {
    config.learner.validate();

    ExperimentResult result;
    MetricAccumulator metrics;
    std::optional<LearnerState> state;
    bool gmm_stream = false;
    std::vector<double> raw_regret_acc, clipped_regret_acc, raw_loss_totals;

    std::size_t step = 0;
    while (true) {
        std::optional<StepRecord> record = source.next();
        if (!record) break;
        ++step;

        const std::size_t n = record->experts.size();
        if (!state) {
            result.n_experts = n;
            gmm_stream = std::all_of(record->experts.begin(), record->experts.end(),
                                     [](const auto& expert) {
                                         return std::holds_alternative<ExpertPrediction>(expert);
                                     });
            const bool sample_stream =
                std::all_of(record->experts.begin(), record->experts.end(),
                            [](const auto& expert) {
                                return std::holds_alternative<SampleSet>(expert);
                            });
            const bool needs_gmm = config.loss == LossKind::probability ||
                                   config.loss == LossKind::soft_min_frde;
            if (needs_gmm && !gmm_stream)
                throw std::invalid_argument(
                    "run_experiment: loss requires GMM predictions but the stream has samples");
            if (!needs_gmm && !sample_stream)
                throw std::invalid_argument(
                    "run_experiment: sample loss requires sample predictions");
            if (config.freeze_alpha && config.freeze_alpha->size() != n)
                throw std::invalid_argument(
                    "run_experiment: freeze_alpha length must match the expert count");
            if (config.learner.kind == LearnerKind::eg && !config.freeze_alpha && n < 2)
                throw std::invalid_argument("run_experiment: eg needs at least two experts");

            state.emplace(WeightVector::uniform(n), config.learner.discount);
            raw_regret_acc.assign(n, 0.0);
            clipped_regret_acc.assign(n, 0.0);
            raw_loss_totals.assign(n, 0.0);
            result.alpha_history.push_back(
                (config.freeze_alpha ? *config.freeze_alpha : state->alpha).values());
        } else if (n != result.n_experts) {
            throw NumericalError(step, "expert count changed mid-stream");
        }

        const WeightVector alpha_t = config.freeze_alpha ? *config.freeze_alpha : state->alpha;

        // Unpack the record's predictions (we own it, so move them out).
        std::vector<ExpertPrediction> predictions;
        std::vector<SampleSet> samples;
        for (auto& expert : record->experts) {
            if (auto* gmm = std::get_if<ExpertPrediction>(&expert))
                predictions.push_back(std::move(*gmm));
            else
                samples.push_back(std::move(std::get<SampleSet>(expert)));
        }
        if (!predictions.empty() && !samples.empty())
            throw NumericalError(step, "mixed GMM/sample streams are not supported");

        // Evaluation metrics (defined for GMM streams only).
        if (gmm_stream) {
            const MoeDistribution moe = build_moe(predictions, alpha_t, true);
            const std::size_t k_moe = clamp_k(config.metrics.top_k, moe.size());
            metrics.push("minADE", k_moe, "moe", min_ade_k(moe, record->future, k_moe));
            metrics.push("minFDE", k_moe, "moe", min_fde_k(moe, record->future, k_moe));

            bool floored = false;
            bool skipped = false;
            const double moe_nll = masked_nll(predictions, alpha_t, config.metrics.nll_exclude,
                                              record->truth, &floored, &skipped);
            if (!skipped) {
                metrics.push("NLL", 0, "moe", moe_nll);
                if (floored) metrics.floor_counts["NLL/moe"] += 1;
            }

            for (std::size_t i = 0; i < predictions.size(); ++i) {
                const std::string entity = "expert_" + std::to_string(i);
                const MoeDistribution single =
                    build_moe(std::span(&predictions[i], 1), WeightVector::uniform(1));
                const std::size_t k_single = clamp_k(config.metrics.top_k, single.size());
                metrics.push("minADE", k_single, entity,
                             min_ade_k(single, record->future, k_single));
                metrics.push("minFDE", k_single, entity,
                             min_fde_k(single, record->future, k_single));
                if (std::find(config.metrics.nll_exclude.begin(),
                              config.metrics.nll_exclude.end(),
                              i) == config.metrics.nll_exclude.end()) {
                    bool expert_floored = false;
                    metrics.push("NLL", 0, entity, nll(single, record->truth, &expert_floored));
                    if (expert_floored) metrics.floor_counts["NLL/" + entity] += 1;
                }
            }
        }

        // Configured online loss and its gradient.
        LossEvaluation eval;
        switch (config.loss) {
            case LossKind::probability:
                eval = probability_loss(predictions, alpha_t, record->truth);
                break;
            case LossKind::soft_min_frde: {
                SmoothingConfig smoothing = config.smoothing;
                std::size_t n_components = 0;
                for (const auto& prediction : predictions) n_components += prediction.n_modes();
                smoothing.k = clamp_k(smoothing.k, n_components);
                eval = soft_min_frde(predictions, alpha_t, record->truth, smoothing);
                break;
            }
            case LossKind::sample_mse:
                eval = aggregate_sample_loss(samples, alpha_t, record->truth,
                                             SampleLossMode::mse);
                break;
            case LossKind::sample_topk: {
                std::size_t max_k = samples.front().n_samples();
                for (const auto& set : samples) max_k = std::min(max_k, set.n_samples());
                eval = aggregate_sample_loss(samples, alpha_t, record->truth,
                                             SampleLossMode::topk,
                                             clamp_k(config.smoothing.k, max_k));
                break;
            }
        }

        const double linearized = dot(alpha_t, eval.gradient);
        const ClippedGradient clipped = clip_gradient(eval.gradient, state->G);
        const double clipped_mixture = dot(alpha_t, clipped.values);

        result.loss_value.push_back(eval.value);
        result.linearized_loss.push_back(linearized);
        result.expert_losses.push_back(eval.gradient);
        result.clipped_expert_losses.push_back(clipped.values);
        for (std::size_t i = 0; i < n; ++i) {
            raw_regret_acc[i] += linearized - eval.gradient[i];
            clipped_regret_acc[i] += clipped_mixture - clipped.values[i];
            raw_loss_totals[i] += eval.gradient[i];
        }
        result.raw_regret.push_back(raw_regret_acc);
        result.clipped_regret.push_back(clipped_regret_acc);
        result.best_so_far.push_back(argmin(raw_loss_totals));

        if (!config.freeze_alpha) {
            state = config.learner.kind == LearnerKind::squint
                        ? squint_step(*state, eval.gradient, config.learner.lagged_update)
                        : eg_step(*state, eval.gradient);
            for (double a : state->alpha) {
                if (!std::isfinite(a))
                    throw NumericalError(step, "learner state went non-finite");
            }
        } else {
            // Keep the clipping bound moving so clipped losses stay comparable.
            LearnerState frozen = *state;
            frozen.G = clipped.bound;
            frozen.t = state->t + 1;
            state = frozen;
        }
        result.alpha_history.push_back(
            (config.freeze_alpha ? *config.freeze_alpha : state->alpha).values());
    }

    result.steps = step;
    if (state) result.final_state = *state;

    // Sliding-window smoothing for every metric series.
    for (auto& [key, series] : metrics.series) {
        series.smoothed = sliding_window_average(series.raw, config.metrics.window);
        (void)key;
    }
    result.metric_series = std::move(metrics.series);
    result.nll_floor_counts = std::move(metrics.floor_counts);

    // Hindsight-best expert per sliding window of the raw per-expert losses.
    if (step > 0) {
        std::vector<std::vector<double>> windowed(result.n_experts);
        for (std::size_t i = 0; i < result.n_experts; ++i) {
            std::vector<double> series(step);
            for (std::size_t t = 0; t < step; ++t) series[t] = result.expert_losses[t][i];
            windowed[i] = sliding_window_average(series, config.metrics.window);
        }
        result.window_best.resize(step);
        for (std::size_t t = 0; t < step; ++t) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < result.n_experts; ++i)
                if (windowed[i][t] < windowed[best][t]) best = i;
            result.window_best[t] = best;
        }
    }
    return result;
}

namespace {

std::string sanitize(const std::string& key) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '/', '_');
    return name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
}

}  // namespace

void write_result(const ExperimentResult& result, const std::filesystem::path& out_dir,
                  const std::string& config_echo_json) {
    std::filesystem::create_directories(out_dir);

    std::string alpha_csv = "step";
    for (std::size_t i = 0; i < result.n_experts; ++i)
        alpha_csv += ",alpha_" + std::to_string(i);
    alpha_csv += '\n';
    for (std::size_t row = 0; row < result.alpha_history.size(); ++row) {
        alpha_csv += std::to_string(row);
        for (double a : result.alpha_history[row]) {
            alpha_csv += ',';
            append_shortest(alpha_csv, a);
        }
        alpha_csv += '\n';
    }
    write_text(out_dir / "alpha.csv", alpha_csv);

    std::string losses_csv = "step,value,linearized";
    for (std::size_t i = 0; i < result.n_experts; ++i)
        losses_csv += ",expert_" + std::to_string(i);
    for (std::size_t i = 0; i < result.n_experts; ++i)
        losses_csv += ",clipped_" + std::to_string(i);
    losses_csv += '\n';
    for (std::size_t t = 0; t < result.steps; ++t) {
        losses_csv += std::to_string(t + 1);
        losses_csv += ',';
        append_shortest(losses_csv, result.loss_value[t]);
        losses_csv += ',';
        append_shortest(losses_csv, result.linearized_loss[t]);
        for (double g : result.expert_losses[t]) {
            losses_csv += ',';
            append_shortest(losses_csv, g);
        }
        for (double g : result.clipped_expert_losses[t]) {
            losses_csv += ',';
            append_shortest(losses_csv, g);
        }
        losses_csv += '\n';
    }
    write_text(out_dir / "losses.csv", losses_csv);

    std::string regret_csv = "step";
    for (std::size_t i = 0; i < result.n_experts; ++i)
        regret_csv += ",raw_" + std::to_string(i);
    for (std::size_t i = 0; i < result.n_experts; ++i)
        regret_csv += ",clipped_" + std::to_string(i);
    regret_csv += ",best_so_far,window_best\n";
    for (std::size_t t = 0; t < result.steps; ++t) {
        regret_csv += std::to_string(t + 1);
        for (double r : result.raw_regret[t]) {
            regret_csv += ',';
            append_shortest(regret_csv, r);
        }
        for (double r : result.clipped_regret[t]) {
            regret_csv += ',';
            append_shortest(regret_csv, r);
        }
        regret_csv += ',' + std::to_string(result.best_so_far[t]);
        regret_csv += ',' + std::to_string(result.window_best[t]);
        regret_csv += '\n';
    }
    write_text(out_dir / "regret.csv", regret_csv);

    for (const auto& [key, series] : result.metric_series) {
        std::ofstream out(out_dir / (sanitize(key) + ".csv"));
        if (!out)
            throw std::runtime_error("cannot write metric series '" + key + "'");
        series.to_csv(out);
    }

    nlohmann::json summary;
    summary["steps"] = result.steps;
    summary["n_experts"] = result.n_experts;
    summary["nll_floor_counts"] = result.nll_floor_counts;
    if (result.steps > 0) {
        const std::size_t best = result.hindsight_best();
        summary["hindsight_best"] = best;
        if (auto crossing = result.steps_to_threshold(best, 0.9))
            summary["steps_to_alpha_0.9"] = *crossing;
    }
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    write_text(out_dir / "config.json", config_echo_json);
}

}  // namespace moeagg
