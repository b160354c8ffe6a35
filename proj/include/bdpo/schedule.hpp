// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace bdpo {

// Variance-preserving discrete schedule. Arrays are indexed 0..steps-1 for
// denoising steps n = 1..N; alpha_bar(0) == 1 refers to the clean sample.
struct NoiseSchedule {
    int steps = 0;
    double beta_min = 0.0, beta_max = 0.0;
    bool clip_samples = false;
    double clip_lo = -1.0, clip_hi = 1.0;

    Eigen::VectorXd beta, alpha, alpha_bar, sigma;

    double beta_at(int n) const { return beta(n - 1); }
    double alpha_at(int n) const { return alpha(n - 1); }
    double alpha_bar_at(int n) const { return n == 0 ? 1.0 : alpha_bar(n - 1); }
    double sigma_at(int n) const { return sigma(n - 1); }

    bool same_schedule(const NoiseSchedule& other) const {
        return steps == other.steps && beta_min == other.beta_min && beta_max == other.beta_max;
    }
};

// Linear beta ramp. sigma_n is the forward posterior std for n >= 2; the
// n = 1 posterior is degenerate, so sigma_1^2 = beta_1 keeps every reverse
// step stochastic.
NoiseSchedule build_vp_schedule(int steps, double beta_min, double beta_max,
                                bool clip_samples = false, double clip_lo = -1.0,
                                double clip_hi = 1.0);

}  // namespace bdpo
