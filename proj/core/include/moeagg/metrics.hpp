/**
 * @file metrics.hpp
 * @brief Evaluation-only metrics over full prediction horizons.
 *
 * These are computed per step against the revealed ground-truth future and
 * never feed back into learning. Displacements use (x, y) only.
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "moeagg/gmm.hpp"

namespace moeagg {

/// True future states x(1..K); must match the predictions' horizon.
struct GroundTruthFuture {
    std::vector<AgentState> states;

    std::size_t horizon() const noexcept { return states.size(); }
};

/// Minimum over the top-k components (by weight, same tie rule as the losses)
/// of the mean per-step (x, y) displacement from the truth.
double min_ade_k(const MoeDistribution& moe, const GroundTruthFuture& truth, std::size_t k);

/// As min_ade_k but only the final-step displacement.
double min_fde_k(const MoeDistribution& moe, const GroundTruthFuture& truth, std::size_t k);

/// Negative log mixture density of the revealed state. Densities below 1e-300
/// are floored before the log; `floored`, when given, reports that the floor
/// was hit so callers can count degenerate steps.
double nll(const MoeDistribution& moe, const AgentState& x_true, bool* floored = nullptr);

/// A named per-step metric stream plus its sliding-window smoothing.
struct MetricSeries {
    std::string name;  // minADE, minFDE or NLL
    std::size_t k = 0; // top-k parameter for displacement metrics, 0 for NLL
    std::vector<double> raw;
    std::vector<double> smoothed;

    /// Writes "step,raw,smoothed" rows (with header).
    void to_csv(std::ostream& out) const;
    std::string to_json() const;
};

}  // namespace moeagg
