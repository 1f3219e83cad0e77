#include <cmath>
#include <random>

#include "doctest.h"
#include "moeagg/gmm.hpp"
#include "oracles.hpp"

using namespace moeagg;

namespace {

GaussianMode unit_mode(double x, double y, double theta, double weight = 1.0) {
    return GaussianMode({AgentState(x, y, theta)}, {{1.0, 1.0, 1.0}}, weight);
}

constexpr double kNorm3d = 0.06349363593424097;  // (2*pi)^{-3/2}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));  // boundary belongs to +pi
    CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(0.3 + 4.0 * kPi) == doctest::Approx(0.3));
    CHECK(wrap_angle(-2.5) == doctest::Approx(-2.5));
    for (double angle : {7.0, -7.0, 123.456, -0.0001}) {
        const double wrapped = wrap_angle(angle);
        CHECK(wrapped > -kPi);
        CHECK(wrapped <= kPi);
    }
}

TEST_CASE("AgentState wraps heading and rejects non-finite coordinates") {
    const AgentState state(1.0, -2.0, 5.0);
    CHECK(state.theta == doctest::Approx(5.0 - kTwoPi));
    CHECK_THROWS_AS(AgentState(std::nan(""), 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(AgentState(0.0, std::numeric_limits<double>::infinity(), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(AgentState(0.0, 0.0, -std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
}

TEST_CASE("type invariants are enforced at construction") {
    CHECK_THROWS_AS(GaussianMode({}, {}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMode({AgentState()}, {{1.0, 0.0, 1.0}}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(GaussianMode({AgentState()}, {{1.0, 1.0, 1.0}}, 1.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(GaussianMode({AgentState(), AgentState()}, {{1.0, 1.0, 1.0}}, 1.0),
                    std::invalid_argument);

    CHECK_THROWS_AS(ExpertPrediction(std::vector<GaussianMode>{}), std::invalid_argument);
    CHECK_THROWS_AS(ExpertPrediction({unit_mode(0, 0, 0, 0.7), unit_mode(1, 0, 0, 0.2)}),
                    std::invalid_argument);  // weights sum to 0.9

    CHECK_THROWS_AS(WeightVector({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(WeightVector({1.5, -0.5}), std::invalid_argument);
    CHECK(WeightVector::uniform(3).size() == 3);
    CHECK(WeightVector::one_hot(4, 2)[2] == 1.0);
}

TEST_CASE("gaussian_pdf_first_step matches the analytic unit-covariance values") {
    const GaussianMode mode = unit_mode(0, 0, 0);
    CHECK(gaussian_pdf_first_step(mode, AgentState(0, 0, 0)) ==
          doctest::Approx(kNorm3d).epsilon(1e-14));
    CHECK(gaussian_pdf_first_step(mode, AgentState(1, 0, 0)) ==
          doctest::Approx(kNorm3d * std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("gaussian_pdf_first_step matches the quadrature oracle") {
    const GaussianMode mode({AgentState(2.0, -1.0, 0.3)}, {{4.0, 1.0, 9.0}}, 1.0);
    const AgentState x(2.5, -1.0, 0.3);
    const double expected = static_cast<double>(oracles::gaussian_pdf_quadrature(mode, x));
    CHECK(gaussian_pdf_first_step(mode, x) == doctest::Approx(expected).epsilon(1e-10));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const ExpertPrediction prediction = oracles::random_prediction(rng, 1, 1);
        std::uniform_real_distribution<double> position(-4.0, 4.0);
        const AgentState point(position(rng), position(rng), position(rng));
        const double oracle =
            static_cast<double>(oracles::gaussian_pdf_quadrature(prediction.modes[0], point));
        CHECK(gaussian_pdf_first_step(prediction.modes[0], point) ==
              doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("gaussian_pdf_first_step is periodic in the heading") {
    const GaussianMode mode({AgentState(0.0, 0.0, 2.9)}, {{1.0, 1.0, 4.0}}, 1.0);
    const double base = gaussian_pdf_first_step(mode, AgentState(0.2, 0.1, -3.0));
    const double shifted = gaussian_pdf_first_step(mode, AgentState(0.2, 0.1, -3.0 + kTwoPi));
    CHECK(shifted == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("build_moe is the identity for a single expert") {
    std::mt19937_64 rng(7);
    const std::vector<ExpertPrediction> predictions = {oracles::random_prediction(rng, 3, 2)};
    const MoeDistribution moe = build_moe(predictions, WeightVector::uniform(1));
    REQUIRE(moe.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(moe.components[j].weight == predictions[0].modes[j].weight);
        CHECK(moe.components[j].expert_index == 0);
        CHECK(moe.components[j].mode_index == j);
        CHECK(moe.components[j].mode.mean[0].x == predictions[0].modes[j].mean[0].x);
    }
}

TEST_CASE("build_moe splits weight across experts") {
    const std::vector<ExpertPrediction> predictions = {
        ExpertPrediction({unit_mode(0, 0, 0)}), ExpertPrediction({unit_mode(1, 1, 0)})};
    const MoeDistribution moe = build_moe(predictions, WeightVector({0.5, 0.5}));
    REQUIRE(moe.size() == 2);
    CHECK(moe.components[0].weight == 0.5);
    CHECK(moe.components[1].weight == 0.5);
}

TEST_CASE("build_moe weights sum to one on a 3x2 mixture") {
    std::mt19937_64 rng(11);
    const auto predictions = oracles::random_predictions(rng, 3, 2, 2);
    const MoeDistribution moe = build_moe(predictions, WeightVector({0.2, 0.3, 0.5}));
    REQUIRE(moe.size() == 6);
    double sum = 0.0;
    for (const auto& component : moe.components) sum += component.weight;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    // deterministic expert-major ordering
    CHECK(moe.components[2].expert_index == 1);
    CHECK(moe.components[3].mode_index == 1);
}

TEST_CASE("build_moe rejects mismatched inputs") {
    std::mt19937_64 rng(13);
    auto predictions = oracles::random_predictions(rng, 2, 2, 3);
    CHECK_THROWS_AS(build_moe(predictions, WeightVector::uniform(3)), std::invalid_argument);

    auto ragged = predictions;
    ragged[1] = oracles::random_prediction(rng, 3, 3);
    CHECK_THROWS_AS(build_moe(ragged, WeightVector::uniform(2)), std::invalid_argument);
    CHECK(build_moe(ragged, WeightVector::uniform(2), /*allow_ragged=*/true).size() == 5);

    auto short_horizon = predictions;
    short_horizon[1] = oracles::random_prediction(rng, 2, 2);
    CHECK_THROWS_AS(build_moe(short_horizon, WeightVector::uniform(2)), std::invalid_argument);
}

TEST_CASE("moe_pdf agrees with single components and identical-component convexity") {
    const GaussianMode mode({AgentState(0.5, -0.2, 0.1)}, {{2.0, 3.0, 5.0}}, 1.0);
    const std::vector<ExpertPrediction> one = {ExpertPrediction({mode})};
    const AgentState x(0.0, 0.0, 0.0);
    const MoeDistribution single = build_moe(one, WeightVector::uniform(1));
    CHECK(moe_pdf(single, x) == doctest::Approx(gaussian_pdf_first_step(mode, x)).epsilon(1e-15));

    GaussianMode a = mode;
    a.weight = 0.3;
    GaussianMode b = mode;
    b.weight = 0.7;
    const std::vector<ExpertPrediction> two = {ExpertPrediction({a, b})};
    const MoeDistribution duplicated = build_moe(two, WeightVector::uniform(1));
    CHECK(moe_pdf(duplicated, x) ==
          doctest::Approx(gaussian_pdf_first_step(mode, x)).epsilon(1e-14));
}

TEST_CASE("moe_pdf matches the brute-force summation oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto predictions = oracles::random_predictions(rng, 3, 2, 2);
        const MoeDistribution moe = build_moe(predictions, oracles::random_simplex(rng, 3));
        std::uniform_real_distribution<double> position(-3.0, 3.0);
        const AgentState x(position(rng), position(rng), position(rng));
        const double density = moe_pdf(moe, x);
        CHECK(density >= 0.0);
        CHECK(density ==
              doctest::Approx(static_cast<double>(oracles::moe_pdf_brute_force(moe, x)))
                  .epsilon(1e-12));
    }
}

TEST_CASE("moe_pdf integrates to one (importance sampling from the mixture)") {
    std::mt19937_64 rng(23);
    std::vector<ExpertPrediction> predictions;
    std::uniform_real_distribution<double> position(-2.0, 2.0);
    std::uniform_real_distribution<double> heading(-1.5, 1.5);
    std::uniform_real_distribution<double> pos_precision(1.0, 6.0);
    std::uniform_real_distribution<double> heading_precision(25.0, 100.0);
    for (int i = 0; i < 2; ++i) {
        std::vector<GaussianMode> modes;
        for (int j = 0; j < 2; ++j) {
            modes.emplace_back(
                std::vector<AgentState>{AgentState(position(rng), position(rng), heading(rng))},
                std::vector<std::array<double, 3>>{
                    {pos_precision(rng), pos_precision(rng), heading_precision(rng)}},
                0.5);
        }
        predictions.emplace_back(std::move(modes));
    }
    const MoeDistribution moe = build_moe(predictions, WeightVector({0.4, 0.6}));

    // Draw from the mixture with an oracle sampler, evaluate the estimator
    // E_q[f/q] with f the implementation and q the oracle density of the
    // (unwrapped) proposal. Heading precisions above keep every draw far from
    // the wrap boundary, so q is the true sampling density.
    std::vector<double> weights;
    for (const auto& component : moe.components) weights.push_back(component.weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::normal_distribution<double> unit(0.0, 1.0);

    const std::size_t n_draws = 120000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t draw = 0; draw < n_draws; ++draw) {
        const auto& component = moe.components[pick(rng)].mode;
        const auto& h = component.precision.front();
        const AgentState sample(component.mean[0].x + unit(rng) / std::sqrt(h[0]),
                                component.mean[0].y + unit(rng) / std::sqrt(h[1]),
                                component.mean[0].theta + unit(rng) / std::sqrt(h[2]));
        const double ratio =
            moe_pdf(moe, sample) /
            static_cast<double>(oracles::moe_pdf_brute_force(moe, sample));
        const double delta = ratio - mean;
        mean += delta / static_cast<double>(draw + 1);
        m2 += delta * (ratio - mean);
    }
    const double stderr_mean = std::sqrt(m2 / static_cast<double>(n_draws - 1) /
                                         static_cast<double>(n_draws));
    CHECK(std::abs(mean - 1.0) <= 3.0 * stderr_mean + 1e-10);
}

}  // TEST_SUITE
