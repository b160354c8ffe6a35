// SPDX-License-Identifier: Apache-2.0
#include "bdpo/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bdpo/errors.hpp"

namespace bdpo {

namespace {

void check_batch(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                 const Eigen::MatrixXd& actions, const char* op) {
    if (states.rows() != p.state_dim || actions.rows() != p.action_dim ||
        states.cols() != actions.cols())
        throw std::invalid_argument(std::string(op) + ": batch shapes (" +
                                    std::to_string(states.rows()) + "x" +
                                    std::to_string(states.cols()) + ", " +
                                    std::to_string(actions.rows()) + "x" +
                                    std::to_string(actions.cols()) + ") do not match dims (" +
                                    std::to_string(p.state_dim) + ", " +
                                    std::to_string(p.action_dim) + ")");
}

void check_step(const NoiseSchedule& s, int n, const char* op) {
    if (n < 1 || n > s.steps)
        throw std::invalid_argument(std::string(op) + ": step " + std::to_string(n) +
                                    " outside [1, " + std::to_string(s.steps) + "]");
}

void clip_inplace(const NoiseSchedule& s, Eigen::MatrixXd& a) {
    if (s.clip_samples) a = a.array().min(s.clip_hi).max(s.clip_lo);
}

// mu = c1(n) * a^n - c2(n) * eps_hat
double rev_c1(const NoiseSchedule& s, int n) { return 1.0 / std::sqrt(s.alpha_at(n)); }
double rev_c2(const NoiseSchedule& s, int n) {
    return s.beta_at(n) / (std::sqrt(1.0 - s.alpha_bar_at(n)) * std::sqrt(s.alpha_at(n)));
}

}  // namespace

DiffusionPolicy DiffusionPolicy::make(int state_dim, int action_dim,
                                      const std::vector<int>& hidden,
                                      const NoiseSchedule& schedule, Rng& rng) {
    if (state_dim < 0 || action_dim < 1)
        throw std::invalid_argument("DiffusionPolicy::make: bad dims");
    std::vector<int> widths;
    widths.push_back(state_dim + action_dim + kTimeEmbedDim);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(action_dim);
    DiffusionPolicy p;
    p.schedule = schedule;
    p.state_dim = state_dim;
    p.action_dim = action_dim;
    p.eps_net = Mlp::make(widths, rng);
    return p;
}

Eigen::MatrixXd assemble_policy_input(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                                      const Eigen::MatrixXd& actions, const Eigen::VectorXi& ns) {
    check_batch(p, states, actions, "assemble_policy_input");
    if (ns.size() != actions.cols())
        throw std::invalid_argument("assemble_policy_input: one step index per column required");
    Eigen::MatrixXd in(p.state_dim + p.action_dim + kTimeEmbedDim, actions.cols());
    in.topRows(p.state_dim) = states;
    in.middleRows(p.state_dim, p.action_dim) = actions;
    // Small-N embedding table, rebuilt per call; schedules stay tiny.
    Eigen::MatrixXd table(kTimeEmbedDim, p.schedule.steps + 1);
    Eigen::VectorXd built = Eigen::VectorXd::Zero(p.schedule.steps + 1);
    for (Eigen::Index c = 0; c < ns.size(); ++c) {
        const int n = ns(c);
        check_step(p.schedule, n, "assemble_policy_input");
        if (!built(n)) {
            table.col(n) = timestep_embedding(n, kTimeEmbedDim);
            built(n) = 1.0;
        }
        in.col(c).tail(kTimeEmbedDim) = table.col(n);
    }
    return in;
}

Eigen::MatrixXd DiffusionPolicy::eps(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                     int n) const {
    return eps(states, actions, Eigen::VectorXi::Constant(actions.cols(), n));
}

Eigen::MatrixXd DiffusionPolicy::eps(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                     const Eigen::VectorXi& ns) const {
    return eps_net.forward(assemble_policy_input(*this, states, actions, ns));
}

Eigen::MatrixXd forward_sample(const NoiseSchedule& s, const Eigen::MatrixXd& a0, int n,
                               const Eigen::MatrixXd& eps) {
    check_step(s, n, "forward_sample");
    const double ab = s.alpha_bar_at(n);
    return std::sqrt(ab) * a0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::MatrixXd forward_sample(const NoiseSchedule& s, const Eigen::MatrixXd& a0,
                               const Eigen::VectorXi& ns, const Eigen::MatrixXd& eps) {
    if (ns.size() != a0.cols() || a0.rows() != eps.rows() || a0.cols() != eps.cols())
        throw std::invalid_argument("forward_sample: shape mismatch");
    Eigen::MatrixXd out(a0.rows(), a0.cols());
    for (Eigen::Index c = 0; c < a0.cols(); ++c) {
        check_step(s, ns(c), "forward_sample");
        const double ab = s.alpha_bar_at(ns(c));
        out.col(c) = std::sqrt(ab) * a0.col(c) + std::sqrt(1.0 - ab) * eps.col(c);
    }
    return out;
}

Eigen::MatrixXd forward_sample_between(const NoiseSchedule& s, const Eigen::MatrixXd& am, int m,
                                       int n, const Eigen::MatrixXd& eps) {
    check_step(s, n, "forward_sample_between");
    if (m < 0 || m >= n)
        throw std::invalid_argument("forward_sample_between: need 0 <= m < n");
    const double ratio = s.alpha_bar_at(n) / s.alpha_bar_at(m);
    return std::sqrt(ratio) * am + std::sqrt(1.0 - ratio) * eps;
}

Eigen::MatrixXd reverse_mean(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, int n) {
    check_step(p.schedule, n, "reverse_mean");
    Eigen::MatrixXd e = p.eps(states, an, n);
    if (!e.allFinite()) throw NumericError("reverse_mean: non-finite network output");
    return rev_c1(p.schedule, n) * an - rev_c2(p.schedule, n) * e;
}

Eigen::MatrixXd reverse_mean(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, const Eigen::VectorXi& ns) {
    Eigen::MatrixXd e = p.eps(states, an, ns);
    if (!e.allFinite()) throw NumericError("reverse_mean: non-finite network output");
    Eigen::MatrixXd out(an.rows(), an.cols());
    for (Eigen::Index c = 0; c < an.cols(); ++c)
        out.col(c) = rev_c1(p.schedule, ns(c)) * an.col(c) - rev_c2(p.schedule, ns(c)) * e.col(c);
    return out;
}

Eigen::MatrixXd reverse_step(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, int n, const Eigen::MatrixXd& noise) {
    Eigen::MatrixXd out = reverse_mean(p, states, an, n) + p.schedule.sigma_at(n) * noise;
    clip_inplace(p.schedule, out);
    return out;
}

Eigen::MatrixXd reverse_step(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, const Eigen::VectorXi& ns,
                             const Eigen::MatrixXd& noise) {
    Eigen::MatrixXd out = reverse_mean(p, states, an, ns);
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        out.col(c) += p.schedule.sigma_at(ns(c)) * noise.col(c);
    clip_inplace(p.schedule, out);
    return out;
}

DiffusionPath ddpm_generate(const DiffusionPolicy& p, const Eigen::MatrixXd& states, Rng& rng) {
    const int N = p.schedule.steps;
    const Eigen::Index B = states.cols();
    DiffusionPath path;
    path.states = states;
    path.actions.assign(N + 1, {});
    path.noises.assign(N + 1, {});
    path.actions[N].resize(p.action_dim, B);
    rng.fill_normal(path.actions[N]);
    for (int n = N; n >= 1; --n) {
        path.noises[n].resize(p.action_dim, B);
        rng.fill_normal(path.noises[n]);
        path.actions[n - 1] = reverse_step(p, states, path.actions[n], n, path.noises[n]);
        if (!path.actions[n - 1].allFinite())
            throw NumericError("ddpm_generate: non-finite sample at step " + std::to_string(n));
    }
    return path;
}

Eigen::MatrixXd ddim_generate(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                              int stride) {
    const int N = p.schedule.steps;
    if (stride < 1 || stride > N) throw std::invalid_argument("ddim_generate: bad stride");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p.action_dim, states.cols());
    // Deterministic start at the prior mean keeps this sampler draw-free.
    int n = N;
    while (n > 0) {
        const int prev = std::max(0, n - stride);
        Eigen::MatrixXd e = p.eps(states, a, n);
        if (!e.allFinite()) throw NumericError("ddim_generate: non-finite prediction");
        const double ab_n = p.schedule.alpha_bar_at(n);
        const double ab_p = p.schedule.alpha_bar_at(prev);
        Eigen::MatrixXd a0_hat = (a - std::sqrt(1.0 - ab_n) * e) / std::sqrt(ab_n);
        a = std::sqrt(ab_p) * a0_hat + std::sqrt(1.0 - ab_p) * e;
        clip_inplace(p.schedule, a);
        n = prev;
    }
    return a;
}

double behavior_noise_loss_with(const NoiseSchedule& s, const EpsFn& eps_fn,
                                const Eigen::MatrixXd& states, const Eigen::MatrixXd& a0,
                                Rng& rng) {
    const Eigen::Index B = a0.cols();
    Eigen::VectorXi ns(B);
    for (Eigen::Index c = 0; c < B; ++c) ns(c) = rng.uniform_int(1, s.steps);
    Eigen::MatrixXd eps(a0.rows(), B);
    rng.fill_normal(eps);
    Eigen::MatrixXd an = forward_sample(s, a0, ns, eps);
    Eigen::MatrixXd pred = eps_fn(states, an, ns);
    return (pred - eps).squaredNorm() / static_cast<double>(B);
}

double behavior_noise_loss(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                           const Eigen::MatrixXd& a0, Rng& rng) {
    return behavior_noise_loss_with(
        p.schedule,
        [&p](const Eigen::MatrixXd& st, const Eigen::MatrixXd& an, const Eigen::VectorXi& ns) {
            return p.eps(st, an, ns);
        },
        states, a0, rng);
}

double behavior_noise_loss_grad(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                                const Eigen::MatrixXd& a0, Rng& rng, Eigen::VectorXd& grad) {
    const Eigen::Index B = a0.cols();
    Eigen::VectorXi ns(B);
    for (Eigen::Index c = 0; c < B; ++c) ns(c) = rng.uniform_int(1, p.schedule.steps);
    Eigen::MatrixXd eps(a0.rows(), B);
    rng.fill_normal(eps);
    Eigen::MatrixXd an = forward_sample(p.schedule, a0, ns, eps);
    MlpTrace trace;
    Eigen::MatrixXd pred =
        mlp_forward_trace(p.eps_net, assemble_policy_input(p, states, an, ns), trace);
    Eigen::MatrixXd diff = pred - eps;
    const double loss = diff.squaredNorm() / static_cast<double>(B);
    diff *= 2.0 / static_cast<double>(B);
    mlp_backward(p.eps_net, trace, diff, grad);
    return loss;
}

Eigen::VectorXd kl_step(const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                        const Eigen::MatrixXd& states, const Eigen::MatrixXd& an, int n) {
    return kl_step(pi, nu, states, an, Eigen::VectorXi::Constant(an.cols(), n));
}

Eigen::VectorXd kl_step(const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                        const Eigen::MatrixXd& states, const Eigen::MatrixXd& an,
                        const Eigen::VectorXi& ns) {
    if (!pi.schedule.same_schedule(nu.schedule))
        throw std::invalid_argument("kl_step: policies use different noise schedules");
    Eigen::MatrixXd mu_pi = reverse_mean(pi, states, an, ns);
    Eigen::MatrixXd mu_nu = reverse_mean(nu, states, an, ns);
    Eigen::VectorXd out(an.cols());
    for (Eigen::Index c = 0; c < an.cols(); ++c) {
        const double s2 = pi.schedule.sigma_at(ns(c)) * pi.schedule.sigma_at(ns(c));
        out(c) = (mu_pi.col(c) - mu_nu.col(c)).squaredNorm() / (2.0 * s2);
    }
    return out;
}

Eigen::VectorXd pathwise_kl(const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                            const DiffusionPath& path) {
    if (path.step_count() != pi.schedule.steps)
        throw std::invalid_argument("pathwise_kl: path length does not match schedule");
    Eigen::VectorXd total = Eigen::VectorXd::Zero(path.states.cols());
    for (int n = 1; n <= pi.schedule.steps; ++n)
        total += kl_step(pi, nu, path.states, path.actions[n], n);
    return total;
}

}  // namespace bdpo
