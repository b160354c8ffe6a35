// SPDX-License-Identifier: Apache-2.0
#include "bdpo/toymdp.hpp"

#include <cmath>
#include <stdexcept>

namespace bdpo {

namespace {

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

ToyMdp::Step ToyMdp::step(const Eigen::Vector2d& s, const Eigen::Vector2d& a, Rng& rng) const {
    Eigen::Vector2d next = s + kappa * a;
    if (dynamics_noise > 0.0) {
        next(0) += dynamics_noise * rng.normal();
        next(1) += dynamics_noise * rng.normal();
    }
    next(0) = clamp1(next(0));
    next(1) = clamp1(next(1));
    return {next, -(next - goal).norm()};
}

Eigen::Vector2d toymdp_behavior_action(const ToyMdp& mdp, const Eigen::Vector2d& s, double kp,
                                       double noise_std, Rng& rng) {
    Eigen::Vector2d a = kp * (mdp.goal - s);
    if (noise_std > 0.0) {
        a(0) += noise_std * rng.normal();
        a(1) += noise_std * rng.normal();
    }
    return {clamp1(a(0)), clamp1(a(1))};
}

OfflineDataset collect_toymdp_dataset(const ToyMdp& mdp, int episodes, double kp,
                                      double noise_std, std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("collect_toymdp_dataset: episodes must be >= 1");
    Rng rng(seed);
    const Eigen::Index n = static_cast<Eigen::Index>(episodes) * mdp.horizon;
    OfflineDataset ds;
    ds.name = "toymdp";
    ds.seed = seed;
    ds.state_dim = 2;
    ds.action_dim = 2;
    ds.states.resize(2, n);
    ds.actions.resize(2, n);
    ds.rewards.resize(n);
    ds.next_states.resize(2, n);
    ds.dones = Eigen::VectorXd::Zero(n);

    Eigen::Index i = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        Eigen::Vector2d s = mdp.reset(rng);
        for (int t = 0; t < mdp.horizon; ++t, ++i) {
            const Eigen::Vector2d a = toymdp_behavior_action(mdp, s, kp, noise_std, rng);
            const auto [next, reward] = mdp.step(s, a, rng);
            ds.states.col(i) = s;
            ds.actions.col(i) = a;
            ds.rewards(i) = reward;
            ds.next_states.col(i) = next;
            s = next;
        }
    }

    // z-score with the population stats of the visited states.
    ds.state_mean = ds.states.rowwise().mean();
    Eigen::VectorXd var = (ds.states.colwise() - ds.state_mean).rowwise().squaredNorm() /
                          static_cast<double>(n);
    ds.state_std = var.cwiseSqrt().cwiseMax(1e-8);
    ds.states = (ds.states.colwise() - ds.state_mean).array().colwise() / ds.state_std.array();
    ds.next_states =
        (ds.next_states.colwise() - ds.state_mean).array().colwise() / ds.state_std.array();

    // Store float32-rounded values so save/load is lossless.
    for (Eigen::Index c = 0; c < n; ++c) {
        for (int r = 0; r < 2; ++r) {
            ds.states(r, c) = f32(ds.states(r, c));
            ds.actions(r, c) = f32(ds.actions(r, c));
            ds.next_states(r, c) = f32(ds.next_states(r, c));
        }
        ds.rewards(c) = f32(ds.rewards(c));
    }
    ds.validate();
    return ds;
}

}  // namespace bdpo
