/**
 * @file learners.hpp
 * @brief Online learners over the probability simplex.
 *
 * Both learners consume the raw loss gradient, rescale it into [0,1]^N with a
 * running magnitude bound (clipping), and reweight the prior from cumulative
 * statistics of the instantaneous regret r_t = dot(alpha_t, g_t) - g_t:
 *
 *  - the second-order learner keeps cumulative regret R and cumulative squared
 *    regret V per expert and multiplies the prior by the potential
 *    xi(R, V) = integral over eta in [0, 1/2] of exp(R*eta - V*eta^2);
 *  - exponentiated gradient reweights by exp(R_i * sqrt(ln N) / sqrt(t)),
 *    which is the classical exp of the negated cumulative clipped loss up to
 *    a factor common to all experts.
 *
 * A discount factor lambda < 1 (R <- lambda*R + r, V <- lambda^2*V + r*r)
 * makes both learners forget the past and track regime changes.
 */
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moeagg/gmm.hpp"

namespace moeagg {

enum class LearnerKind { squint, eg };

struct LearnerConfig {
    LearnerKind kind = LearnerKind::squint;
    double discount = 1.0;  // lambda in (0, 1]
    /// When set, the update computes the new alpha from the statistics as they
    /// were BEFORE folding in the newest instantaneous regret, so alpha always
    /// lags the stream by one observation. Off by default.
    bool lagged_update = false;

    void validate() const;
};

/// Full learner bookkeeping. A value type: steps are pure state -> state
/// transitions, so one stream must be processed sequentially but independent
/// learners can run concurrently without coordination.
struct LearnerState {
    WeightVector prior;          // alpha_1
    WeightVector alpha;          // current play
    std::vector<double> R;       // cumulative (discounted) regret per expert
    std::vector<double> V;       // cumulative (discounted) squared regret
    double G = 0.0;              // running bound on |raw gradient|
    std::size_t t = 0;           // steps consumed
    double discount = 1.0;       // lambda

    LearnerState(WeightVector prior_, double discount_ = 1.0);

    std::size_t n_experts() const noexcept { return prior.size(); }
};

/// Uniform-prior state with the given expert count.
LearnerState make_learner_state(std::size_t n_experts, double discount = 1.0);

struct ClippedGradient {
    std::vector<double> values;  // entries in [0, 1]
    double bound = 0.0;          // updated G
};

/// Affine rescaling of the raw gradient into [0,1]^N: G' = max(max_i |g_i|, G),
/// clipped = ((g / G') + 1) / 2. An all-zero history (G' = 0) maps to 0.5.
ClippedGradient clip_gradient(std::span<const double> raw, double current_bound);

/// Potential xi(R, V) used by the second-order update (see file header).
/// Evaluated in an overflow-safe form; throws on V < 0 or non-finite input.
double squint_potential(double R, double V);

/// log(xi(R, V)); the stable quantity the learner actually combines.
double squint_log_potential(double R, double V);

/// One second-order update: clip, fold the instantaneous regret into R and V
/// (discounted), then reweight the prior by the potential in log space.
LearnerState squint_step(const LearnerState& state, std::span<const double> raw_gradient,
                         bool lagged_update = false);

/// One exponentiated-gradient update with the same clipping and regret
/// bookkeeping. Requires at least two experts.
LearnerState eg_step(const LearnerState& state, std::span<const double> raw_gradient);

/// Per-step hedging record: the mixture's linearized loss, the per-expert
/// losses (the raw gradient), and the running regret against each expert.
struct RegretRecord {
    double per_step_mixture_loss = 0.0;
    std::vector<double> per_step_expert_loss;
    std::vector<double> cumulative_regret_vs_each;
};

/// Appends records while maintaining the cumulative regret invariant.
class RegretTracker {
  public:
    void append(double mixture_loss, std::span<const double> expert_losses);
    const std::vector<RegretRecord>& history() const noexcept { return history_; }

  private:
    std::vector<RegretRecord> history_;
};

/// Recomputes the cumulative regret vector from scratch over the history:
/// entry i = sum_t (mixture_loss_t - expert_loss_t[i]). Throws on empty input.
std::vector<double> cumulative_regret(std::span<const RegretRecord> history);

/// Checkpoint serialization: a JSON document with fields prior, alpha, R, V,
/// G, t, discount; arrays in expert order.
std::string learner_state_to_json(const LearnerState& state);
LearnerState learner_state_from_json(std::string_view json_text);

}  // namespace moeagg
