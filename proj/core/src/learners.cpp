#include "moeagg/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "moeagg/special_functions.hpp"

namespace moeagg {

namespace {

constexpr double kLogSqrtPi = 0.5723649429247001;  // log(sqrt(pi))

// Below this V the potential is evaluated as a series in V around V = 0; the
// erfcx difference forms lose too many digits to cancellation there.
constexpr double kSeriesThresholdV = 1e-4;

void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

// Moments of exp(R*eta) over eta in [0, 1/2]:
//   I_m(R) = integral of eta^{2m} * exp(R*eta) d eta, m = 0, 1, 2.
// Closed forms cancel catastrophically near R = 0, where the Maclaurin series
// in R takes over.

double moment0(double R) {
    if (R == 0.0) return 0.5;
    return std::expm1(0.5 * R) / R;
}

double moment1(double R) {
    if (std::abs(R) < 2.0) {
        // sum_k R^k / (k! * 2^{k+3}) / (k+3)
        double power = 0.125;  // R^k / (k! * 2^{k+3})
        double sum = power / 3.0;
        for (int k = 1; k <= 40; ++k) {
            power *= R / (2.0 * k);
            const double contribution = power / (k + 3.0);
            sum += contribution;
            if (std::abs(contribution) < 1e-22 * std::abs(sum)) break;
        }
        return sum;
    }
    const double r2 = R * R;
    return (std::exp(0.5 * R) * (0.25 * r2 - R + 2.0) - 2.0) / (r2 * R);
}

double moment2(double R) {
    if (std::abs(R) < 2.0) {
        double power = 1.0 / 32.0;  // R^k / (k! * 2^{k+5})
        double sum = power / 5.0;
        for (int k = 1; k <= 40; ++k) {
            power *= R / (2.0 * k);
            const double contribution = power / (k + 5.0);
            sum += contribution;
            if (std::abs(contribution) < 1e-22 * std::abs(sum)) break;
        }
        return sum;
    }
    const double r2 = R * R;
    const double r3 = r2 * R;
    const double r4 = r2 * r2;
    const double r5 = r4 * R;
    return std::exp(0.5 * R) *
               (1.0 / (16.0 * R) - 0.5 / r2 + 3.0 / r3 - 12.0 / r4 + 24.0 / r5) -
           24.0 / r5;
}

double log_potential_series(double R, double V) {
    if (R > 500.0) {
        // I_0 ~ exp(R/2)/R overflows; work with moment ratios instead.
        const double ratio1 = 0.25 - 1.0 / R + 2.0 / (R * R);
        const double ratio2 = 1.0 / 16.0;
        return 0.5 * R - std::log(R) + std::log1p(-std::exp(-0.5 * R)) +
               std::log1p(-V * ratio1 + 0.5 * V * V * ratio2);
    }
    if (R < -500.0) {
        const double ratio1 = 2.0 / (R * R);
        return -std::log(-R) + std::log1p(-std::exp(0.5 * R)) + std::log1p(-V * ratio1);
    }
    const double xi = moment0(R) - V * moment1(R) + 0.5 * V * V * moment2(R);
    return std::log(xi);
}

}  // namespace

double squint_log_potential(double R, double V) {
    require(std::isfinite(R), "squint_potential: R must be finite");
    require(std::isfinite(V), "squint_potential: V must be finite");
    require(V >= 0.0, "squint_potential: V must be nonnegative");

    if (V < kSeriesThresholdV) return log_potential_series(R, V);

    const double s = std::sqrt(V);
    const double half_width = 0.5 * s;
    const double x1 = -R / (2.0 * s);
    const double x2 = x1 + half_width;
    const double log_prefactor = kLogSqrtPi - std::log(2.0 * s);

    if (x1 >= 0.0) {
        // R <= 0: both erfcx arguments nonnegative, scale factor <= 1.
        const double scale = std::exp(0.5 * R - 0.25 * V);
        return log_prefactor + std::log(erfcx(x1) - scale * erfcx(x2));
    }
    if (x2 >= 0.0) {
        // 0 < R <= V: the erf values add, no cancellation.
        return log_prefactor + x1 * x1 + std::log(std::erf(x2) + std::erf(-x1));
    }
    // R > V: shift both arguments positive and pull out exp(R/2 - V/4).
    const double delta = 0.5 * R - 0.25 * V;
    const double y1 = -x1;
    const double y2 = -x2;
    return log_prefactor + delta + std::log(erfcx(y2) - std::exp(-delta) * erfcx(y1));
}

double squint_potential(double R, double V) {
    return std::exp(squint_log_potential(R, V));
}

void LearnerConfig::validate() const {
    if (!(discount > 0.0) || discount > 1.0)
        throw std::invalid_argument("LearnerConfig: discount must lie in (0, 1]");
}

LearnerState::LearnerState(WeightVector prior_, double discount_)
    : prior(prior_), alpha(prior_), R(prior_.size(), 0.0), V(prior_.size(), 0.0),
      discount(discount_) {
    require(discount > 0.0 && discount <= 1.0, "LearnerState: discount must lie in (0, 1]");
}

LearnerState make_learner_state(std::size_t n_experts, double discount) {
    return LearnerState(WeightVector::uniform(n_experts), discount);
}

ClippedGradient clip_gradient(std::span<const double> raw, double current_bound) {
    require(current_bound >= 0.0 && std::isfinite(current_bound),
            "clip_gradient: bound must be finite and nonnegative");
    double bound = current_bound;
    for (double g : raw) {
        require(std::isfinite(g), "clip_gradient: gradient entries must be finite");
        bound = std::max(bound, std::abs(g));
    }
    ClippedGradient clipped;
    clipped.bound = bound;
    clipped.values.reserve(raw.size());
    for (double g : raw)
        clipped.values.push_back(bound == 0.0 ? 0.5 : 0.5 * (g / bound + 1.0));
    return clipped;
}

namespace {

// Shared clipping + regret-statistics update for both learners.
struct SteppedStats {
    ClippedGradient clipped;
    std::vector<double> R;
    std::vector<double> V;
};

SteppedStats advance_stats(const LearnerState& state, std::span<const double> raw_gradient) {
    require(raw_gradient.size() == state.n_experts(),
            "learner step: gradient length must match the expert count");
    SteppedStats stats;
    stats.clipped = clip_gradient(raw_gradient, state.G);

    double mixture = 0.0;
    for (std::size_t i = 0; i < stats.clipped.values.size(); ++i)
        mixture += state.alpha[i] * stats.clipped.values[i];

    const double lambda = state.discount;
    const double lambda_sq = lambda * lambda;
    stats.R.resize(state.n_experts());
    stats.V.resize(state.n_experts());
    for (std::size_t i = 0; i < state.n_experts(); ++i) {
        const double r = mixture - stats.clipped.values[i];
        stats.R[i] = lambda * state.R[i] + r;
        stats.V[i] = lambda_sq * state.V[i] + r * r;
    }
    return stats;
}

WeightVector normalized_from_log_weights(std::vector<double> log_weights) {
    const double peak = *std::max_element(log_weights.begin(), log_weights.end());
    double sum = 0.0;
    for (double& lw : log_weights) {
        lw = std::exp(lw - peak);
        sum += lw;
    }
    for (double& w : log_weights) w /= sum;
    // One exact renormalization keeps the simplex invariant at 1e-12.
    double check = 0.0;
    for (double w : log_weights) check += w;
    for (double& w : log_weights) w /= check;
    return WeightVector(std::move(log_weights));
}

}  // namespace

LearnerState squint_step(const LearnerState& state, std::span<const double> raw_gradient,
                         bool lagged_update) {
    SteppedStats stats = advance_stats(state, raw_gradient);
    const std::vector<double>& R_used = lagged_update ? state.R : stats.R;
    const std::vector<double>& V_used = lagged_update ? state.V : stats.V;

    std::vector<double> log_weights(state.n_experts());
    for (std::size_t i = 0; i < state.n_experts(); ++i)
        log_weights[i] = std::log(state.prior[i]) + squint_log_potential(R_used[i], V_used[i]);

    LearnerState next = state;
    next.alpha = normalized_from_log_weights(std::move(log_weights));
    next.R = std::move(stats.R);
    next.V = std::move(stats.V);
    next.G = stats.clipped.bound;
    next.t = state.t + 1;
    return next;
}

LearnerState eg_step(const LearnerState& state, std::span<const double> raw_gradient) {
    require(state.n_experts() >= 2, "eg_step: needs at least two experts");
    SteppedStats stats = advance_stats(state, raw_gradient);

    // exp(-sum of clipped losses * rate) differs from exp(R_i * rate) by a
    // factor common to all experts, so the regret statistic drives the update
    // directly and in log space.
    const double t_new = static_cast<double>(state.t + 1);
    const double rate = std::sqrt(std::log(static_cast<double>(state.n_experts()))) /
                        std::sqrt(t_new);

    std::vector<double> log_weights(state.n_experts());
    for (std::size_t i = 0; i < state.n_experts(); ++i) log_weights[i] = stats.R[i] * rate;

    LearnerState next = state;
    next.alpha = normalized_from_log_weights(std::move(log_weights));
    next.R = std::move(stats.R);
    next.V = std::move(stats.V);
    next.G = stats.clipped.bound;
    next.t = state.t + 1;
    return next;
}

void RegretTracker::append(double mixture_loss, std::span<const double> expert_losses) {
    RegretRecord record;
    record.per_step_mixture_loss = mixture_loss;
    record.per_step_expert_loss.assign(expert_losses.begin(), expert_losses.end());
    record.cumulative_regret_vs_each.resize(expert_losses.size(), 0.0);
    if (!history_.empty()) {
        if (history_.back().per_step_expert_loss.size() != expert_losses.size())
            throw std::invalid_argument("RegretTracker: expert count changed mid-stream");
        record.cumulative_regret_vs_each = history_.back().cumulative_regret_vs_each;
    }
    for (std::size_t i = 0; i < expert_losses.size(); ++i)
        record.cumulative_regret_vs_each[i] += mixture_loss - expert_losses[i];
    history_.push_back(std::move(record));
}

std::vector<double> cumulative_regret(std::span<const RegretRecord> history) {
    if (history.empty()) throw std::invalid_argument("cumulative_regret: empty history");
    std::vector<double> regret(history.front().per_step_expert_loss.size(), 0.0);
    for (const auto& record : history) {
        for (std::size_t i = 0; i < regret.size(); ++i)
            regret[i] += record.per_step_mixture_loss - record.per_step_expert_loss[i];
    }
    return regret;
}

std::string learner_state_to_json(const LearnerState& state) {
    nlohmann::json doc;
    doc["prior"] = state.prior.values();
    doc["alpha"] = state.alpha.values();
    doc["R"] = state.R;
    doc["V"] = state.V;
    doc["G"] = state.G;
    doc["t"] = state.t;
    doc["discount"] = state.discount;
    return doc.dump();
}

LearnerState learner_state_from_json(std::string_view json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    LearnerState state(WeightVector(doc.at("prior").get<std::vector<double>>()),
                       doc.at("discount").get<double>());
    state.alpha = WeightVector(doc.at("alpha").get<std::vector<double>>());
    state.R = doc.at("R").get<std::vector<double>>();
    state.V = doc.at("V").get<std::vector<double>>();
    state.G = doc.at("G").get<double>();
    state.t = doc.at("t").get<std::size_t>();
    if (state.alpha.size() != state.prior.size() || state.R.size() != state.prior.size() ||
        state.V.size() != state.prior.size())
        throw std::invalid_argument("learner_state_from_json: inconsistent array lengths");
    return state;
}

}  // namespace moeagg
