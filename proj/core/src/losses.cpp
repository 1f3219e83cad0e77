#include "moeagg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace moeagg {

namespace detail {

std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k) {
    if (k == 0 || k > values.size())
        throw std::invalid_argument("topk_indices: k out of range");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable sort keeps the original (expert-major) order on ties.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    order.resize(k);
    return order;
}

std::vector<double> component_weights(std::span<const ExpertPrediction> predictions,
                                      const WeightVector& alpha) {
    if (alpha.size() != predictions.size())
        throw std::invalid_argument("component_weights: alpha length must match the expert count");
    std::vector<double> weights;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (const auto& mode : predictions[i].modes) weights.push_back(alpha[i] * mode.weight);
    return weights;
}

std::vector<double> component_first_step_displacements(
    std::span<const ExpertPrediction> predictions, const AgentState& x_true,
    bool include_heading) {
    std::vector<double> displacements;
    for (const auto& prediction : predictions) {
        for (const auto& mode : prediction.modes) {
            const AgentState& mu = mode.mean.front();
            const double dx = x_true.x - mu.x;
            const double dy = x_true.y - mu.y;
            double sq = dx * dx + dy * dy;
            if (include_heading) {
                const double dt = wrap_angle(x_true.theta - mu.theta);
                sq += dt * dt;
            }
            displacements.push_back(std::sqrt(sq));
        }
    }
    return displacements;
}

}  // namespace detail

void SmoothingConfig::validate(std::size_t n_components) const {
    if (!(softmin_beta > 0.0) || !std::isfinite(softmin_beta))
        throw std::invalid_argument("SmoothingConfig: softmin_beta must be positive");
    if (!(softsort_tau > 0.0) || !std::isfinite(softsort_tau))
        throw std::invalid_argument("SmoothingConfig: softsort_tau must be positive");
    if (k < 1 || k > n_components)
        throw std::invalid_argument("SmoothingConfig: k out of range");
}

LossEvaluation probability_loss(std::span<const ExpertPrediction> predictions,
                                const WeightVector& alpha, const AgentState& x_true) {
    if (alpha.size() != predictions.size())
        throw std::invalid_argument("probability_loss: alpha length must match the expert count");
    const std::size_t horizon = predictions.empty() ? 0 : predictions.front().horizon();
    for (const auto& prediction : predictions) {
        if (prediction.horizon() != horizon)
            throw std::invalid_argument("probability_loss: experts must share the horizon");
    }

    LossEvaluation eval;
    eval.gradient.reserve(predictions.size());
    for (const auto& prediction : predictions) {
        double expert_density = 0.0;
        for (const auto& mode : prediction.modes)
            expert_density += mode.weight * gaussian_pdf_first_step(mode, x_true);
        eval.gradient.push_back(-expert_density);
    }
    // The loss is linear in alpha, so the value is the dot product exactly and
    // the gradient doubles as the vector of individual expert losses.
    eval.value = 0.0;
    for (std::size_t i = 0; i < eval.gradient.size(); ++i)
        eval.value += alpha[i] * eval.gradient[i];
    eval.per_expert_loss = eval.gradient;
    return eval;
}

double hard_min_frde(std::span<const ExpertPrediction> predictions,
                     const WeightVector& alpha, const AgentState& x_true,
                     std::size_t k, bool include_heading) {
    const std::vector<double> weights = detail::component_weights(predictions, alpha);
    const std::vector<double> displacements =
        detail::component_first_step_displacements(predictions, x_true, include_heading);
    const std::vector<std::size_t> selected = detail::topk_indices(weights, k);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t index : selected) best = std::min(best, displacements[index]);
    return best;
}

LossEvaluation soft_min_frde(std::span<const ExpertPrediction> predictions,
                             const WeightVector& alpha, const AgentState& x_true,
                             const SmoothingConfig& cfg) {
    const std::vector<double> w = detail::component_weights(predictions, alpha);
    const std::vector<double> d =
        detail::component_first_step_displacements(predictions, x_true, cfg.include_heading);
    cfg.validate(w.size());

    const std::size_t n_components = w.size();
    const std::size_t k = cfg.k;
    const double inv_tau = 1.0 / cfg.softsort_tau;
    const std::vector<std::size_t> top = detail::topk_indices(w, k);

    // Soft selection: row r targets the r-th largest weight; P[r] is the
    // softmax of -|w[top[r]] - w[c]| / tau over all components c.
    std::vector<std::vector<double>> P(k, std::vector<double>(n_components));
    std::vector<double> e(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        const double pivot = w[top[r]];
        double norm = 0.0;
        for (std::size_t c = 0; c < n_components; ++c) {
            // Logits are <= 0 with the maximum at c == top[r]; safe to exponentiate.
            P[r][c] = std::exp(-std::abs(pivot - w[c]) * inv_tau);
            norm += P[r][c];
        }
        double row_error = 0.0;
        for (std::size_t c = 0; c < n_components; ++c) {
            P[r][c] /= norm;
            row_error += P[r][c] * d[c];
        }
        e[r] = row_error;
    }

    // softmin_beta over the k soft-selected errors, log-sum-exp stabilized.
    const double e_min = *std::min_element(e.begin(), e.end());
    double z = 0.0;
    std::vector<double> q(k);
    for (std::size_t r = 0; r < k; ++r) {
        q[r] = std::exp(-cfg.softmin_beta * (e[r] - e_min));
        z += q[r];
    }
    const double value = e_min - std::log(z) / cfg.softmin_beta;
    for (double& qr : q) qr /= z;  // dL/de_r

    // Backpropagate to the component weights. With the sorting permutation
    // locally constant, the only w-dependence is through the pivot w[top[r]]
    // and the |pivot - w_c| logits.
    std::vector<double> dL_dw(n_components, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        const double pivot = w[top[r]];
        double pivot_term = 0.0;
        for (std::size_t c = 0; c < n_components; ++c) {
            const double diff = pivot - w[c];
            const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            const double coupling = P[r][c] * (d[c] - e[r]) * sign * inv_tau;
            dL_dw[c] += q[r] * coupling;
            pivot_term += coupling;
        }
        dL_dw[top[r]] -= q[r] * pivot_term;
    }

    // Chain through w_{(i,j)} = alpha_i * p_ij.
    LossEvaluation eval;
    eval.value = value;
    eval.gradient.assign(predictions.size(), 0.0);
    std::size_t component = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (const auto& mode : predictions[i].modes)
            eval.gradient[i] += dL_dw[component++] * mode.weight;
    eval.per_expert_loss = eval.gradient;
    return eval;
}

std::vector<double> sliding_window_average(std::span<const double> values,
                                           std::size_t window) {
    if (window < 1) throw std::invalid_argument("sliding_window_average: window must be >= 1");
    std::vector<double> averaged;
    averaged.reserve(values.size());
    double running = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
        running += values[t];
        if (t >= window) running -= values[t - window];
        const std::size_t count = std::min(t + 1, window);
        averaged.push_back(running / static_cast<double>(count));
    }
    return averaged;
}

}  // namespace moeagg
