// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "bdpo/toymdp.hpp"

using namespace bdpo;

TEST_SUITE_BEGIN("toymdp");

TEST_CASE("dynamics follow the clamped point-mass update") {
    ToyMdp env;  // kappa 0.2, goal (0.5, 0.5), no noise
    Rng rng(1);

    const auto mid = env.step({0.1, -0.2}, {0.5, 1.0}, rng);
    CHECK(mid.next(0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(mid.next(1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(mid.reward ==
          doctest::Approx(-std::hypot(0.2 - 0.5, 0.0 - 0.5)).epsilon(1e-14));

    // pushing past the wall clamps
    const auto wall = env.step({1.0, 1.0}, {1.0, 1.0}, rng);
    CHECK(wall.next(0) == 1.0);
    CHECK(wall.next(1) == 1.0);
    CHECK(wall.reward == doctest::Approx(-std::hypot(0.5, 0.5)).epsilon(1e-14));

    // rewards are never positive, bounded by the box diagonal from the goal
    Rng probe(2);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector2d s = env.reset(probe);
        const Eigen::Vector2d a(probe.uniform(-1.0, 1.0), probe.uniform(-1.0, 1.0));
        const auto r = env.step(s, a, probe);
        CHECK(r.reward <= 0.0);
        CHECK(r.reward >= -std::hypot(1.5, 1.5));
        CHECK(r.next.cwiseAbs().maxCoeff() <= 1.0);
    }
}

TEST_CASE("behavior controller is proportional, noisy, and box-limited") {
    ToyMdp env;
    Rng quiet(3);
    const Eigen::Vector2d s(-0.5, 0.25);
    const Eigen::Vector2d a = toymdp_behavior_action(env, s, 0.8, 0.0, quiet);
    CHECK(a(0) == doctest::Approx(0.8 * (0.5 - -0.5)).epsilon(1e-14));
    CHECK(a(1) == doctest::Approx(0.8 * (0.5 - 0.25)).epsilon(1e-14));

    // saturation: large gain clamps to the box
    const Eigen::Vector2d sat = toymdp_behavior_action(env, {-1.0, -1.0}, 5.0, 0.0, quiet);
    CHECK(sat(0) == 1.0);
    CHECK(sat(1) == 1.0);

    Rng noisy(4);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector2d na = toymdp_behavior_action(env, s, 1.0, 0.5, noisy);
        CHECK(na.cwiseAbs().maxCoeff() <= 1.0);
    }
}

TEST_CASE("collection produces a normalized, truncation-only dataset") {
    ToyMdp env;
    const OfflineDataset ds = collect_toymdp_dataset(env, 25, 1.0, 0.3, 11);
    REQUIRE(ds.size() == 25 * env.horizon);
    CHECK(ds.state_dim == 2);
    CHECK(ds.action_dim == 2);
    CHECK((ds.dones.array() == 0.0).all());  // horizon cutoffs, not terminals
    CHECK(ds.actions.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(ds.rewards.maxCoeff() <= 0.0);
    ds.validate();

    // z-scoring: per-row mean ~ 0 and population std ~ 1 up to f32 rounding
    const Eigen::VectorXd mean = ds.states.rowwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-6);
    const Eigen::VectorXd var =
        (ds.states.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(ds.size());
    CHECK((var.array() - 1.0).abs().maxCoeff() < 1e-5);
    CHECK(ds.state_mean.size() == 2);
    CHECK(ds.state_std.minCoeff() > 0.0);

    // normalization is invertible back to the box
    const Eigen::MatrixXd raw =
        (ds.states.array().colwise() * ds.state_std.array()).colwise() + ds.state_mean.array();
    CHECK(raw.cwiseAbs().maxCoeff() <= 1.0 + 1e-5);

    const OfflineDataset again = collect_toymdp_dataset(env, 25, 1.0, 0.3, 11);
    CHECK(again.states == ds.states);
    CHECK(again.rewards == ds.rewards);

    const OfflineDataset other = collect_toymdp_dataset(env, 25, 1.0, 0.3, 12);
    CHECK(other.states != ds.states);
}

TEST_CASE("proportional control beats drifting in collected reward") {
    // sanity on the data the learner will see: the controller pulls toward
    // the goal, so late-episode rewards beat early ones on average
    ToyMdp env;
    const OfflineDataset ds = collect_toymdp_dataset(env, 40, 1.0, 0.1, 21);
    double early = 0.0, late = 0.0;
    for (int ep = 0; ep < 40; ++ep) {
        early += ds.rewards(ep * env.horizon + 1);
        late += ds.rewards(ep * env.horizon + env.horizon - 1);
    }
    CHECK(late / 40.0 > early / 40.0);
}

TEST_SUITE_END();
