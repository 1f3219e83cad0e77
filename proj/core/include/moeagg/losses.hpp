/**
 * @file losses.hpp
 * @brief Online loss functions over the expert weight vector.
 *
 * Two families are provided:
 *  - the convex probability loss: the negated mixture density of the revealed
 *    state, linear in alpha with an analytic gradient;
 *  - the nonconvex top-k minimum first displacement error and its smoothed
 *    surrogate (softsort selection + softmin reduction), which keeps gradients
 *    nonzero for every expert.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "moeagg/gmm.hpp"

namespace moeagg {

/// Loss value with its gradient with respect to alpha. For linear losses the
/// gradient entry i is also the i-th expert's individual loss; that vector is
/// exposed as `per_expert_loss` for the hedging bookkeeping.
struct LossEvaluation {
    double value = 0.0;
    std::vector<double> gradient;
    std::vector<double> per_expert_loss;
};

/// Temperatures and mode count for the smoothed top-k displacement loss.
struct SmoothingConfig {
    double softmin_beta = 10.0;  // softmin temperature
    double softsort_tau = 0.1;   // softsort temperature
    std::size_t k = 10;          // number of top modes kept
    bool include_heading = false;

    /// Throws std::invalid_argument unless beta, tau > 0 and 1 <= k <= n_components.
    void validate(std::size_t n_components) const;
};

/// Convex probability loss: value = -p(x_true | mixture(alpha)), gradient
/// entry i = -sum_j p_ij * pdf(mode_ij, x_true). Linear in alpha, so
/// value == dot(alpha, gradient) exactly.
LossEvaluation probability_loss(std::span<const ExpertPrediction> predictions,
                                const WeightVector& alpha, const AgentState& x_true);

/// Ranks all component weights alpha_i * p_ij, keeps the k largest (ties
/// broken by expert-major component order) and returns the minimum first-step
/// displacement from x_true among them. Displacement is Euclidean over (x, y)
/// unless `include_heading` adds the wrapped heading residual as a third axis.
double hard_min_frde(std::span<const ExpertPrediction> predictions,
                     const WeightVector& alpha, const AgentState& x_true,
                     std::size_t k, bool include_heading = false);

/// Differentiable surrogate of hard_min_frde. Soft top-k selection uses the
/// row-stochastic softsort matrix P[r][c] = softmax_c(-|sorted_w_r - w_c|/tau)
/// over the k largest weights; the selected errors are reduced with
/// softmin_beta. The gradient is the exact derivative of the composite with
/// respect to alpha (predictions are treated as constants).
LossEvaluation soft_min_frde(std::span<const ExpertPrediction> predictions,
                             const WeightVector& alpha, const AgentState& x_true,
                             const SmoothingConfig& cfg);

/// Trailing mean over the last `window` entries; partial windows at the start
/// average over whatever is available. Empty input yields empty output.
std::vector<double> sliding_window_average(std::span<const double> values,
                                           std::size_t window);

namespace detail {

/// Indices of the k largest values, descending, stable in the original order
/// on ties. Shared by the displacement losses and the evaluation metrics.
std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k);

/// Flattened component weights alpha_i * p_ij in expert-major order.
std::vector<double> component_weights(std::span<const ExpertPrediction> predictions,
                                      const WeightVector& alpha);

/// First-step displacement of every component's mean from x_true.
std::vector<double> component_first_step_displacements(
    std::span<const ExpertPrediction> predictions, const AgentState& x_true,
    bool include_heading);

}  // namespace detail

}  // namespace moeagg
