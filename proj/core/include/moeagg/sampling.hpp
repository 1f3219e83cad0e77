/**
 * @file sampling.hpp
 * @brief Aggregation of experts that emit trajectory samples instead of GMMs.
 *
 * Per-expert sample losses stay linear in alpha, so the learners apply
 * unchanged; the mixture itself is formed by importance-sampling each
 * expert's set in proportion to its weight.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "moeagg/gmm.hpp"
#include "moeagg/losses.hpp"

namespace moeagg {

/// M sampled trajectories sharing one horizon K.
struct SampleSet {
    std::vector<std::vector<AgentState>> samples;

    SampleSet() = default;
    explicit SampleSet(std::vector<std::vector<AgentState>> samples_);

    std::size_t n_samples() const noexcept { return samples.size(); }
    std::size_t horizon() const noexcept { return samples.empty() ? 0 : samples.front().size(); }
};

/// Mean squared (x, y) displacement of the samples' first step from x_true.
/// `full_horizon` instead averages the squared displacement over all K steps
/// (evaluation-only variant).
double sample_loss_mse(const SampleSet& samples, const AgentState& x_true,
                       bool full_horizon = false);

/// Mean of the k smallest squared first-step displacements.
double sample_loss_topk(const SampleSet& samples, const AgentState& x_true, std::size_t k);

enum class SampleLossMode { mse, topk };

/// Weighted sum of per-expert sample losses; linear in alpha, so the gradient
/// entry i is expert i's loss and feeds the learners unchanged.
LossEvaluation aggregate_sample_loss(std::span<const SampleSet> per_expert,
                                     const WeightVector& alpha, const AgentState& x_true,
                                     SampleLossMode mode, std::size_t k = 1);

/// Draws floor(m_out * alpha_i) samples per expert uniformly with replacement,
/// then fills the shortfall by largest fractional remainder (ties to the lower
/// expert index). Output is expert-major and bit-reproducible given the seed.
SampleSet importance_sample_moe(std::span<const SampleSet> per_expert,
                                const WeightVector& alpha, std::size_t m_out,
                                std::uint64_t rng_seed);

}  // namespace moeagg
