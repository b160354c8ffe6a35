// SPDX-License-Identifier: Apache-2.0
#include "bdpo/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bdpo {

NoiseSchedule build_vp_schedule(int steps, double beta_min, double beta_max, bool clip_samples,
                                double clip_lo, double clip_hi) {
    if (steps < 1) throw std::invalid_argument("build_vp_schedule: steps must be >= 1");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max)
        throw std::invalid_argument("build_vp_schedule: need 0 < beta_min <= beta_max < 1, got [" +
                                    std::to_string(beta_min) + ", " + std::to_string(beta_max) +
                                    "]");
    if (clip_samples && !(clip_lo < clip_hi))
        throw std::invalid_argument("build_vp_schedule: empty clip range");

    NoiseSchedule s;
    s.steps = steps;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.clip_samples = clip_samples;
    s.clip_lo = clip_lo;
    s.clip_hi = clip_hi;
    s.beta.resize(steps);
    for (int i = 0; i < steps; ++i)
        s.beta(i) = steps == 1 ? beta_min
                               : beta_min + (beta_max - beta_min) * i / (steps - 1.0);
    s.alpha = 1.0 - s.beta.array();
    s.alpha_bar.resize(steps);
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        prod *= s.alpha(i);
        s.alpha_bar(i) = prod;
    }
    s.sigma.resize(steps);
    s.sigma(0) = std::sqrt(s.beta(0));
    for (int i = 1; i < steps; ++i)
        s.sigma(i) = std::sqrt(s.beta(i) * (1.0 - s.alpha_bar(i - 1)) / (1.0 - s.alpha_bar(i)));
    return s;
}

}  // namespace bdpo
