// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace bdpo {

// Scales g so its global L2 norm is at most max_norm (no-op if already below).
// Returns the pre-clip norm. max_norm <= 0 disables clipping.
double clip_global_norm(Eigen::VectorXd& g, double max_norm);

// shadow <- (1 - rate) * shadow + rate * live
void ema_update(Eigen::VectorXd& shadow, const Eigen::VectorXd& live, double rate);

struct EmaTracker {
    double rate = 0.005;
    Eigen::VectorXd shadow;

    EmaTracker() = default;
    EmaTracker(double rate, const Eigen::VectorXd& init) : rate(rate), shadow(init) {}
    void update(const Eigen::VectorXd& live) { ema_update(shadow, live, rate); }
};

// Adam with bias correction. Gradient clipping happens before the moment
// update; the cosine schedule anneals lr to zero over `cosine_horizon` steps.
struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 0.0;        // 0 disables
    std::int64_t cosine_horizon = 0;  // 0 disables annealing
};

struct AdamState {
    AdamConfig cfg;
    Eigen::VectorXd m, v;
    std::int64_t step = 0;

    AdamState() = default;
    AdamState(AdamConfig cfg, Eigen::Index n)
        : cfg(cfg), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

    double current_lr() const;
    // Mutates grad in place when clipping applies.
    void apply(Eigen::VectorXd& params, Eigen::VectorXd& grad);
};

}  // namespace bdpo
