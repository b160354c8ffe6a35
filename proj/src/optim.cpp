// SPDX-License-Identifier: Apache-2.0
#include "bdpo/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdpo/errors.hpp"

namespace bdpo {

double clip_global_norm(Eigen::VectorXd& g, double max_norm) {
    const double norm = g.norm();
    if (max_norm > 0.0 && norm > max_norm) g *= max_norm / norm;
    return norm;
}

void ema_update(Eigen::VectorXd& shadow, const Eigen::VectorXd& live, double rate) {
    if (shadow.size() != live.size())
        throw std::invalid_argument("ema_update: size mismatch " + std::to_string(shadow.size()) +
                                    " vs " + std::to_string(live.size()));
    shadow = (1.0 - rate) * shadow + rate * live;
}

double AdamState::current_lr() const {
    if (cfg.cosine_horizon <= 0) return cfg.lr;
    const double frac =
        static_cast<double>(std::min(step, cfg.cosine_horizon)) / cfg.cosine_horizon;
    return cfg.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void AdamState::apply(Eigen::VectorXd& params, Eigen::VectorXd& grad) {
    if (params.size() != m.size() || grad.size() != m.size())
        throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
    if (step == std::numeric_limits<std::int64_t>::max())
        throw NumericError("adam_step: step counter overflow");
    if (!grad.allFinite()) throw NumericError("adam_step: non-finite gradient");
    clip_global_norm(grad, cfg.clip_norm);
    const double lr = current_lr();  // schedule is indexed by the pre-update count
    step += 1;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    params.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

}  // namespace bdpo
