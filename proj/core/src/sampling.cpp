#include "moeagg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace moeagg {

namespace {

double squared_planar_displacement(const AgentState& a, const AgentState& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

}  // namespace

SampleSet::SampleSet(std::vector<std::vector<AgentState>> samples_)
    : samples(std::move(samples_)) {
    if (samples.empty()) throw std::invalid_argument("SampleSet: needs at least one sample");
    const std::size_t k = samples.front().size();
    if (k == 0) throw std::invalid_argument("SampleSet: horizon must be at least 1");
    for (const auto& trajectory : samples) {
        if (trajectory.size() != k)
            throw std::invalid_argument("SampleSet: samples must share the horizon");
    }
}

double sample_loss_mse(const SampleSet& samples, const AgentState& x_true,
                       bool full_horizon) {
    double total = 0.0;
    if (full_horizon) {
        for (const auto& trajectory : samples.samples)
            for (const auto& state : trajectory)
                total += squared_planar_displacement(state, x_true);
        return total / static_cast<double>(samples.n_samples() * samples.horizon());
    }
    for (const auto& trajectory : samples.samples)
        total += squared_planar_displacement(trajectory.front(), x_true);
    return total / static_cast<double>(samples.n_samples());
}

double sample_loss_topk(const SampleSet& samples, const AgentState& x_true, std::size_t k) {
    if (k < 1 || k > samples.n_samples())
        throw std::invalid_argument("sample_loss_topk: k out of range");
    std::vector<double> squared;
    squared.reserve(samples.n_samples());
    for (const auto& trajectory : samples.samples)
        squared.push_back(squared_planar_displacement(trajectory.front(), x_true));
    std::nth_element(squared.begin(), squared.begin() + (k - 1), squared.end());
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += squared[i];
    return total / static_cast<double>(k);
}

LossEvaluation aggregate_sample_loss(std::span<const SampleSet> per_expert,
                                     const WeightVector& alpha, const AgentState& x_true,
                                     SampleLossMode mode, std::size_t k) {
    if (alpha.size() != per_expert.size())
        throw std::invalid_argument(
            "aggregate_sample_loss: alpha length must match the expert count");

    LossEvaluation eval;
    eval.gradient.reserve(per_expert.size());
    for (const auto& samples : per_expert) {
        const double loss = mode == SampleLossMode::mse
                                ? sample_loss_mse(samples, x_true)
                                : sample_loss_topk(samples, x_true, k);
        eval.gradient.push_back(loss);
    }
    eval.value = 0.0;
    for (std::size_t i = 0; i < eval.gradient.size(); ++i)
        eval.value += alpha[i] * eval.gradient[i];
    eval.per_expert_loss = eval.gradient;
    return eval;
}

SampleSet importance_sample_moe(std::span<const SampleSet> per_expert,
                                const WeightVector& alpha, std::size_t m_out,
                                std::uint64_t rng_seed) {
    if (alpha.size() != per_expert.size())
        throw std::invalid_argument(
            "importance_sample_moe: alpha length must match the expert count");
    if (m_out < 1) throw std::invalid_argument("importance_sample_moe: m_out must be >= 1");
    const std::size_t horizon = per_expert.empty() ? 0 : per_expert.front().horizon();
    for (const auto& samples : per_expert) {
        if (samples.horizon() != horizon)
            throw std::invalid_argument("importance_sample_moe: experts must share the horizon");
    }

    // floor(m_out * alpha_i) per expert, shortfall by largest fractional
    // remainder with ties going to the lower expert index.
    std::vector<std::size_t> counts(per_expert.size());
    std::vector<double> remainders(per_expert.size());
    std::size_t allocated = 0;
    for (std::size_t i = 0; i < per_expert.size(); ++i) {
        const double target = static_cast<double>(m_out) * alpha[i];
        counts[i] = static_cast<std::size_t>(std::floor(target));
        remainders[i] = target - static_cast<double>(counts[i]);
        allocated += counts[i];
    }
    std::vector<std::size_t> order(per_expert.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t rank = 0; allocated < m_out; ++rank, ++allocated) counts[order[rank]] += 1;

    std::mt19937_64 rng(rng_seed);
    std::vector<std::vector<AgentState>> drawn;
    drawn.reserve(m_out);
    for (std::size_t i = 0; i < per_expert.size(); ++i) {
        if (counts[i] == 0) continue;
        if (per_expert[i].n_samples() == 0)
            throw std::invalid_argument(
                "importance_sample_moe: empty expert sample set with nonzero allocation");
        std::uniform_int_distribution<std::size_t> pick(0, per_expert[i].n_samples() - 1);
        for (std::size_t c = 0; c < counts[i]; ++c)
            drawn.push_back(per_expert[i].samples[pick(rng)]);
    }
    return SampleSet(std::move(drawn));
}

}  // namespace moeagg
