#include <cmath>
#include <random>

#include "doctest.h"
#include "moeagg/losses.hpp"
#include "oracles.hpp"

using namespace moeagg;

namespace {

constexpr double kNorm3d = 0.06349363593424097;

// Central finite differences along simplex tangent directions e_i - e_last;
// per-coordinate perturbations would leave the simplex that WeightVector
// enforces. For any loss L(alpha) this estimates g_i - g_last.
template <typename LossFn>
std::vector<double> tangent_fd(const LossFn& loss, const WeightVector& alpha, double step) {
    const std::size_t n = alpha.size();
    std::vector<double> diffs(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::vector<double> up = alpha.values();
        std::vector<double> down = alpha.values();
        up[i] += step;
        up[n - 1] -= step;
        down[i] -= step;
        down[n - 1] += step;
        diffs[i] = (loss(WeightVector(up)) - loss(WeightVector(down))) / (2.0 * step);
    }
    return diffs;
}

void check_gradient_vs_fd(const std::vector<double>& gradient,
                          const std::vector<double>& fd_diffs, double rel_tol) {
    const std::size_t n = gradient.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double analytic = gradient[i] - gradient[n - 1];
        const double scale = std::max({std::abs(analytic), std::abs(fd_diffs[i]), 1e-8});
        CHECK(std::abs(analytic - fd_diffs[i]) / scale <= rel_tol);
    }
}

ExpertPrediction point_expert(double x, double y, const std::vector<double>& mode_weights) {
    std::vector<GaussianMode> modes;
    for (double w : mode_weights)
        modes.emplace_back(std::vector<AgentState>{AgentState(x, y, 0.0)},
                           std::vector<std::array<double, 3>>{{1.0, 1.0, 1.0}}, w);
    return ExpertPrediction(std::move(modes));
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("probability_loss at a unit Gaussian centered on the truth") {
    const std::vector<ExpertPrediction> predictions = {point_expert(0.0, 0.0, {1.0})};
    const LossEvaluation eval =
        probability_loss(predictions, WeightVector::uniform(1), AgentState(0, 0, 0));
    CHECK(eval.value == doctest::Approx(-kNorm3d).epsilon(1e-14));
    CHECK(eval.gradient.size() == 1);
    CHECK(eval.per_expert_loss == eval.gradient);
}

TEST_CASE("probability_loss is exactly linear and has nonpositive gradient") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const auto predictions = oracles::random_predictions(rng, 3, 2, 2);
        const WeightVector alpha = oracles::random_simplex(rng, 3);
        std::uniform_real_distribution<double> position(-3.0, 3.0);
        const AgentState truth(position(rng), position(rng), position(rng));
        const LossEvaluation eval = probability_loss(predictions, alpha, truth);

        double dot = 0.0;
        for (std::size_t i = 0; i < 3; ++i) dot += alpha[i] * eval.gradient[i];
        CHECK(eval.value == dot);  // exact: the value is computed as this dot
        for (double g : eval.gradient) CHECK(g <= 0.0);

        // and the value agrees with the mixture density route
        const double density = moe_pdf(build_moe(predictions, alpha), truth);
        CHECK(eval.value == doctest::Approx(-density).epsilon(1e-12));
    }
}

TEST_CASE("probability_loss gradient matches finite differences") {
    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 10; ++trial) {
        const auto predictions = oracles::random_predictions(rng, 3, 2, 2);
        const WeightVector alpha = oracles::random_simplex(rng, 3);
        std::uniform_real_distribution<double> position(-3.0, 3.0);
        const AgentState truth(position(rng), position(rng), position(rng));

        const LossEvaluation eval = probability_loss(predictions, alpha, truth);
        const auto fd = tangent_fd(
            [&](const WeightVector& a) { return probability_loss(predictions, a, truth).value; },
            alpha, 1e-6);
        check_gradient_vs_fd(eval.gradient, fd, 1e-6);
    }
}

TEST_CASE("hard_min_frde selects everything at k = N*L") {
    std::mt19937_64 rng(103);
    const auto predictions = oracles::random_predictions(rng, 2, 3, 1);
    const WeightVector alpha = oracles::random_simplex(rng, 2);
    const AgentState truth(0.0, 0.0, 0.0);
    const auto displacements =
        detail::component_first_step_displacements(predictions, truth, false);
    const double plain_min = *std::min_element(displacements.begin(), displacements.end());
    CHECK(hard_min_frde(predictions, alpha, truth, 6) == plain_min);
}

TEST_CASE("hard_min_frde is zero when the top mode sits on the truth") {
    const std::vector<ExpertPrediction> predictions = {point_expert(1.0, 2.0, {1.0}),
                                                       point_expert(5.0, 5.0, {1.0})};
    const WeightVector alpha({0.9, 0.1});
    CHECK(hard_min_frde(predictions, alpha, AgentState(1.0, 2.0, 0.5), 1) == 0.0);
}

TEST_CASE("hard_min_frde matches the exhaustive oracle and is monotone in k") {
    std::mt19937_64 rng(104);
    for (int trial = 0; trial < 30; ++trial) {
        const auto predictions = oracles::random_predictions(rng, 3, 2, 1);
        const WeightVector alpha = oracles::random_simplex(rng, 3);
        std::uniform_real_distribution<double> position(-3.0, 3.0);
        const AgentState truth(position(rng), position(rng), 0.0);

        const auto weights = detail::component_weights(predictions, alpha);
        const auto displacements =
            detail::component_first_step_displacements(predictions, truth, false);

        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k <= 6; ++k) {
            const double value = hard_min_frde(predictions, alpha, truth, k);
            CHECK(value == oracles::topk_min_brute_force(weights, displacements, k));
            CHECK(value <= previous);
            previous = value;
        }
    }
    const std::vector<ExpertPrediction> single = {point_expert(0, 0, {1.0})};
    CHECK_THROWS_AS(hard_min_frde(single, WeightVector::uniform(1), AgentState(), 2),
                    std::invalid_argument);
}

TEST_CASE("argtopk selection is invariant to a common weight scale") {
    std::mt19937_64 rng(105);
    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_real_distribution<double> draw(0.01, 1.0);
        std::vector<double> weights(8);
        for (double& w : weights) w = draw(rng);
        const auto base = detail::topk_indices(weights, 3);
        std::vector<double> scaled = weights;
        for (double& w : scaled) w *= 37.5;
        CHECK(detail::topk_indices(scaled, 3) == base);
    }
}

TEST_CASE("soft_min_frde collapses to d - ln(k)/beta for equal displacements") {
    // every mode mean at the same point => every component displacement equal
    const std::vector<ExpertPrediction> predictions = {point_expert(3.0, 4.0, {0.7, 0.3}),
                                                       point_expert(3.0, 4.0, {0.2, 0.8})};
    const WeightVector alpha({0.6, 0.4});
    const AgentState truth(0.0, 0.0, 0.0);  // displacement 5 for every component
    SmoothingConfig cfg;
    cfg.softmin_beta = 10.0;
    cfg.softsort_tau = 0.1;

    cfg.k = 3;
    CHECK(soft_min_frde(predictions, alpha, truth, cfg).value ==
          doctest::Approx(5.0 - std::log(3.0) / 10.0).epsilon(1e-12));

    // the spec's two-value instance: both selected errors 1.0, k = 2
    const std::vector<ExpertPrediction> unit = {point_expert(1.0, 0.0, {0.5, 0.5})};
    cfg.k = 2;
    CHECK(soft_min_frde(unit, WeightVector::uniform(1), truth, cfg).value ==
          doctest::Approx(1.0 - std::log(2.0) / 10.0).epsilon(1e-9));
}

TEST_CASE("soft_min_frde gradient matches tangent finite differences") {
    std::mt19937_64 rng(106);
    SmoothingConfig cfg;
    cfg.softmin_beta = 10.0;
    cfg.softsort_tau = 0.1;
    cfg.k = 3;
    for (int trial = 0; trial < 20; ++trial) {
        const auto predictions = oracles::random_predictions(rng, 3, 2, 1);
        const WeightVector alpha = oracles::random_simplex(rng, 3);
        std::uniform_real_distribution<double> position(-3.0, 3.0);
        const AgentState truth(position(rng), position(rng), 0.0);

        const LossEvaluation eval = soft_min_frde(predictions, alpha, truth, cfg);
        const auto fd = tangent_fd(
            [&](const WeightVector& a) { return soft_min_frde(predictions, a, truth, cfg).value; },
            alpha, 1e-6);
        check_gradient_vs_fd(eval.gradient, fd, 1e-4);
    }
}

TEST_CASE("soft_min_frde respects the softmin sandwich") {
    std::mt19937_64 rng(107);
    SmoothingConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const auto predictions = oracles::random_predictions(rng, 2, 3, 1);
        const WeightVector alpha = oracles::random_simplex(rng, 2);
        std::uniform_real_distribution<double> position(-3.0, 3.0);
        const AgentState truth(position(rng), position(rng), 0.0);
        cfg.k = 1 + static_cast<std::size_t>(rng() % 6);

        const auto displacements =
            detail::component_first_step_displacements(predictions, truth, false);
        const double lo = *std::min_element(displacements.begin(), displacements.end());
        const double hi = *std::max_element(displacements.begin(), displacements.end());
        const double value = soft_min_frde(predictions, alpha, truth, cfg).value;
        CHECK(value <= hi + 1e-12);
        CHECK(value >= lo - std::log(static_cast<double>(cfg.k)) / cfg.softmin_beta - 1e-12);
    }
}

TEST_CASE("soft_min_frde approaches hard_min_frde at low temperature") {
    std::mt19937_64 rng(108);
    SmoothingConfig cold;
    cold.softmin_beta = 1e4;
    cold.softsort_tau = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
        // weights get well separated gaps by construction
        const std::vector<ExpertPrediction> predictions = {
            point_expert(rng() % 7 * 0.5, rng() % 5 * 0.5, {0.62, 0.25, 0.13}),
            point_expert(rng() % 7 * 0.5, rng() % 5 * 0.5, {0.55, 0.33, 0.12})};
        const WeightVector alpha({0.58, 0.42});
        const AgentState truth(1.1, 0.3, 0.0);
        cold.k = 1 + static_cast<std::size_t>(rng() % 6);
        const double soft = soft_min_frde(predictions, alpha, truth, cold).value;
        const double hard = hard_min_frde(predictions, alpha, truth, cold.k);
        CHECK(std::abs(soft - hard) <= 1e-3);
    }
}

TEST_CASE("soft_min_frde validates its configuration") {
    const std::vector<ExpertPrediction> predictions = {point_expert(1, 1, {1.0})};
    SmoothingConfig cfg;
    cfg.k = 5;  // only one component exists
    CHECK_THROWS_AS(soft_min_frde(predictions, WeightVector::uniform(1), AgentState(), cfg),
                    std::invalid_argument);
    cfg.k = 1;
    cfg.softmin_beta = 0.0;
    CHECK_THROWS_AS(soft_min_frde(predictions, WeightVector::uniform(1), AgentState(), cfg),
                    std::invalid_argument);
}

TEST_CASE("sliding_window_average") {
    CHECK(sliding_window_average({}, 5).empty());

    const std::vector<double> values = {1.0, 2.0, 3.0, 4.0};
    CHECK(sliding_window_average(values, 1) == values);
    CHECK(sliding_window_average(values, 2) == std::vector<double>{1.0, 1.5, 2.5, 3.5});

    const std::vector<double> constant(10, 2.5);
    for (double v : sliding_window_average(constant, 4)) CHECK(v == doctest::Approx(2.5));

    // window longer than the sequence averages the available prefix
    CHECK(sliding_window_average(values, 100).back() == doctest::Approx(2.5));
    CHECK_THROWS_AS(sliding_window_average(values, 0), std::invalid_argument);
}

}  // TEST_SUITE
