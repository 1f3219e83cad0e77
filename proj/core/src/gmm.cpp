#include "moeagg/gmm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace moeagg {

namespace {

constexpr double kWeightSumTol = 1e-9;
constexpr double kSimplexTol = 1e-12;

void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace

double wrap_angle(double angle) noexcept {
    double wrapped = std::remainder(angle, kTwoPi);
    if (wrapped <= -kPi) wrapped += kTwoPi;
    return wrapped;
}

AgentState::AgentState(double x_, double y_, double theta_) : x(x_), y(y_) {
    require(std::isfinite(x_) && std::isfinite(y_) && std::isfinite(theta_),
            "AgentState: coordinates must be finite");
    theta = wrap_angle(theta_);
}

GaussianMode::GaussianMode(std::vector<AgentState> mean_,
                           std::vector<std::array<double, 3>> precision_, double weight_)
    : mean(std::move(mean_)), precision(std::move(precision_)), weight(weight_) {
    require(!mean.empty(), "GaussianMode: horizon must be at least 1");
    require(mean.size() == precision.size(),
            "GaussianMode: mean and precision must share the horizon");
    for (const auto& h : precision) {
        for (double entry : h) {
            require(std::isfinite(entry) && entry > 0.0,
                    "GaussianMode: precision entries must be positive and finite");
        }
    }
    require(std::isfinite(weight) && weight >= 0.0 && weight <= 1.0,
            "GaussianMode: weight must lie in [0, 1]");
}

ExpertPrediction::ExpertPrediction(std::vector<GaussianMode> modes_, std::string expert_id_)
    : modes(std::move(modes_)), expert_id(std::move(expert_id_)) {
    require(!modes.empty(), "ExpertPrediction: needs at least one mode");
    const std::size_t k = modes.front().horizon();
    double weight_sum = 0.0;
    for (const auto& mode : modes) {
        require(mode.horizon() == k, "ExpertPrediction: modes must share the horizon");
        weight_sum += mode.weight;
    }
    require(std::abs(weight_sum - 1.0) <= kWeightSumTol,
            "ExpertPrediction: mode weights must sum to 1");
}

WeightVector::WeightVector(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    require(!alpha_.empty(), "WeightVector: must not be empty");
    double sum = 0.0;
    for (double a : alpha_) {
        require(std::isfinite(a) && a >= 0.0, "WeightVector: entries must be nonnegative");
        sum += a;
    }
    require(std::abs(sum - 1.0) <= kSimplexTol, "WeightVector: entries must sum to 1");
}

WeightVector WeightVector::uniform(std::size_t n) {
    require(n > 0, "WeightVector: must not be empty");
    return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

WeightVector WeightVector::one_hot(std::size_t n, std::size_t index) {
    require(index < n, "WeightVector: one-hot index out of range");
    std::vector<double> alpha(n, 0.0);
    alpha[index] = 1.0;
    return WeightVector(std::move(alpha));
}

MoeDistribution build_moe(std::span<const ExpertPrediction> predictions,
                          const WeightVector& alpha, bool allow_ragged) {
    require(!predictions.empty(), "build_moe: needs at least one prediction");
    require(alpha.size() == predictions.size(),
            "build_moe: alpha length must match the expert count");

    const std::size_t horizon = predictions.front().horizon();
    const std::size_t n_modes = predictions.front().n_modes();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        require(predictions[i].horizon() == horizon,
                "build_moe: experts must share the prediction horizon");
        if (!allow_ragged) {
            require(predictions[i].n_modes() == n_modes,
                    "build_moe: experts have differing mode counts (ragged input rejected)");
        }
    }

    MoeDistribution moe;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        for (std::size_t j = 0; j < predictions[i].n_modes(); ++j) {
            const GaussianMode& mode = predictions[i].modes[j];
            MoeComponent component;
            component.weight = alpha[i] * mode.weight;
            component.expert_index = i;
            component.mode_index = j;
            component.mode = mode;
            weight_sum += component.weight;
            moe.components.push_back(std::move(component));
        }
    }
    require(std::abs(weight_sum - 1.0) <= kWeightSumTol,
            "build_moe: component weights do not sum to 1");
    return moe;
}

double gaussian_pdf_first_step(const GaussianMode& mode, const AgentState& x) {
    require(std::isfinite(x.x) && std::isfinite(x.y) && std::isfinite(x.theta),
            "gaussian_pdf_first_step: state must be finite");
    const AgentState& mu = mode.mean.front();
    const auto& h = mode.precision.front();

    const double dx = x.x - mu.x;
    const double dy = x.y - mu.y;
    const double dt = wrap_angle(x.theta - mu.theta);

    const double quad = h[0] * dx * dx + h[1] * dy * dy + h[2] * dt * dt;
    // (2*pi)^{-3/2} for the 3-D normalization
    constexpr double kNorm3d = 0.06349363593424097;
    return kNorm3d * std::sqrt(h[0] * h[1] * h[2]) * std::exp(-0.5 * quad);
}

double moe_pdf(const MoeDistribution& moe, const AgentState& x) {
    double density = 0.0;
    for (const auto& component : moe.components) {
        if (component.weight == 0.0) continue;
        density += component.weight * gaussian_pdf_first_step(component.mode, x);
    }
    return density;
}

}  // namespace moeagg
