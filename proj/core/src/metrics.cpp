#include "moeagg/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "moeagg/losses.hpp"

namespace moeagg {

namespace {

constexpr double kDensityFloor = 1e-300;

std::vector<std::size_t> top_components(const MoeDistribution& moe, std::size_t k) {
    std::vector<double> weights;
    weights.reserve(moe.size());
    for (const auto& component : moe.components) weights.push_back(component.weight);
    return detail::topk_indices(weights, k);
}

double planar_distance(const AgentState& a, const AgentState& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

void check_horizon(const MoeDistribution& moe, const GroundTruthFuture& truth) {
    for (const auto& component : moe.components) {
        if (component.mode.horizon() != truth.horizon())
            throw std::invalid_argument("metrics: prediction and truth horizons differ");
    }
}

}  // namespace

double min_ade_k(const MoeDistribution& moe, const GroundTruthFuture& truth, std::size_t k) {
    check_horizon(moe, truth);
    const std::size_t horizon = truth.horizon();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t index : top_components(moe, k)) {
        const auto& mean = moe.components[index].mode.mean;
        double total = 0.0;
        for (std::size_t step = 0; step < horizon; ++step)
            total += planar_distance(truth.states[step], mean[step]);
        best = std::min(best, total / static_cast<double>(horizon));
    }
    return best;
}

double min_fde_k(const MoeDistribution& moe, const GroundTruthFuture& truth, std::size_t k) {
    check_horizon(moe, truth);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t index : top_components(moe, k)) {
        best = std::min(best,
                        planar_distance(truth.states.back(), moe.components[index].mode.mean.back()));
    }
    return best;
}

double nll(const MoeDistribution& moe, const AgentState& x_true, bool* floored) {
    double density = moe_pdf(moe, x_true);
    const bool hit_floor = density < kDensityFloor;
    if (hit_floor) density = kDensityFloor;
    if (floored != nullptr) *floored = hit_floor;
    return -std::log(density);
}

namespace {

// Shortest round-trip representation, shared with the experiment CSV writer.
void append_double(std::string& out, double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    out.append(buffer, result.ptr);
}

}  // namespace

void MetricSeries::to_csv(std::ostream& out) const {
    std::string text = "step,raw,smoothed\n";
    for (std::size_t t = 0; t < raw.size(); ++t) {
        text += std::to_string(t + 1);
        text += ',';
        append_double(text, raw[t]);
        text += ',';
        append_double(text, smoothed[t]);
        text += '\n';
    }
    out << text;
}

std::string MetricSeries::to_json() const {
    nlohmann::json doc;
    doc["name"] = name;
    doc["k"] = k;
    doc["raw"] = raw;
    doc["smoothed"] = smoothed;
    return doc.dump();
}

}  // namespace moeagg
