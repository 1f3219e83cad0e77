/**
 * @file gmm.hpp
 * @brief Domain types for Gaussian-mixture trajectory predictions and the
 *        mixture-of-experts distribution built from them.
 *
 * Each expert emits a small GMM over future agent states: L modes, each a
 * mean trajectory over K steps with per-step diagonal precision (reciprocal
 * variances in x, y, theta). A probability vector over experts turns N such
 * predictions into one mixture of N*L weighted Gaussian components.
 */
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace moeagg {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle) noexcept;

/// Planar agent state (x, y in meters, heading in radians).
/// Heading is normalized to (-pi, pi] on construction.
struct AgentState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    AgentState() = default;
    AgentState(double x_, double y_, double theta_);
};

/// One mode of a prediction: a mean trajectory over K steps, per-step
/// diagonal precision (1/sigma^2 in x, y, theta) and a mode weight in [0, 1].
struct GaussianMode {
    std::vector<AgentState> mean;
    std::vector<std::array<double, 3>> precision;
    double weight = 0.0;

    GaussianMode() = default;
    GaussianMode(std::vector<AgentState> mean_,
                 std::vector<std::array<double, 3>> precision_, double weight_);

    std::size_t horizon() const noexcept { return mean.size(); }
};

/// A single expert's GMM at one timestep: L modes sharing one horizon,
/// mode weights forming a distribution (sum to 1 within 1e-9).
struct ExpertPrediction {
    std::vector<GaussianMode> modes;
    std::string expert_id;

    ExpertPrediction() = default;
    ExpertPrediction(std::vector<GaussianMode> modes_, std::string expert_id_ = {});

    std::size_t n_modes() const noexcept { return modes.size(); }
    std::size_t horizon() const noexcept { return modes.empty() ? 0 : modes.front().horizon(); }
};

/// Probability vector over experts. Entries are nonnegative and sum to 1
/// within 1e-12; both are enforced at construction.
class WeightVector {
  public:
    explicit WeightVector(std::vector<double> alpha);

    static WeightVector uniform(std::size_t n);
    static WeightVector one_hot(std::size_t n, std::size_t index);

    const std::vector<double>& values() const noexcept { return alpha_; }
    double operator[](std::size_t i) const noexcept { return alpha_[i]; }
    std::size_t size() const noexcept { return alpha_.size(); }

    auto begin() const noexcept { return alpha_.begin(); }
    auto end() const noexcept { return alpha_.end(); }

  private:
    std::vector<double> alpha_;
};

/// One component of the aggregated mixture: weight alpha_i * p_ij plus the
/// source (expert, mode) indices it came from.
struct MoeComponent {
    double weight = 0.0;
    std::size_t expert_index = 0;
    std::size_t mode_index = 0;
    GaussianMode mode;
};

/// The mixture-of-experts distribution: N*L components in deterministic
/// expert-major, mode-minor order. Component weights sum to 1 within 1e-9.
struct MoeDistribution {
    std::vector<MoeComponent> components;

    std::size_t size() const noexcept { return components.size(); }
};

/// Scales each expert's mode weights by that expert's probability mass and
/// concatenates the components expert-major. All experts must share the
/// horizon; differing mode counts are rejected unless `allow_ragged` is set.
MoeDistribution build_moe(std::span<const ExpertPrediction> predictions,
                          const WeightVector& alpha, bool allow_ragged = false);

/// Density of the mode's first prediction step at `x`: a 3-D Gaussian with
/// mean mode.mean[0] and diagonal covariance from mode.precision[0]. The
/// heading residual is wrapped to (-pi, pi] before evaluation.
double gaussian_pdf_first_step(const GaussianMode& mode, const AgentState& x);

/// Mixture density at `x`: the weighted sum of first-step component pdfs.
double moe_pdf(const MoeDistribution& moe, const AgentState& x);

}  // namespace moeagg
