// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "bdpo/datasets.hpp"
#include "bdpo/rng.hpp"

namespace bdpo {

// Point mass on [-1, 1]^2: s' = clamp(s + kappa * a + noise), r = -|s' - goal|.
// Rewards are never positive; episodes truncate at the horizon (no terminal
// states, so collected transitions carry done = 0).
struct ToyMdp {
    double kappa = 0.2;
    Eigen::Vector2d goal{0.5, 0.5};
    double dynamics_noise = 0.0;
    int horizon = 40;

    Eigen::Vector2d reset(Rng& rng) const {
        return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    }

    struct Step {
        Eigen::Vector2d next;
        double reward;
    };
    Step step(const Eigen::Vector2d& s, const Eigen::Vector2d& a, Rng& rng) const;
};

// Proportional controller toward the goal with exploration noise, clamped to
// the action box.
Eigen::Vector2d toymdp_behavior_action(const ToyMdp& mdp, const Eigen::Vector2d& s, double kp,
                                       double noise_std, Rng& rng);

// Rolls `episodes` full-horizon episodes and z-scores states with the
// collected statistics.
OfflineDataset collect_toymdp_dataset(const ToyMdp& mdp, int episodes, double kp,
                                      double noise_std, std::uint64_t seed);

}  // namespace bdpo
