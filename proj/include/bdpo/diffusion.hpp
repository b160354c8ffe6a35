// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "bdpo/mlp.hpp"
#include "bdpo/rng.hpp"
#include "bdpo/schedule.hpp"

namespace bdpo {

// Conditional denoiser: eps_net maps [state; action; embed(n)] to a noise
// prediction. state_dim may be zero for unconditional generation.
struct DiffusionPolicy {
    NoiseSchedule schedule;
    Mlp eps_net;
    int state_dim = 0;
    int action_dim = 0;

    static DiffusionPolicy make(int state_dim, int action_dim, const std::vector<int>& hidden,
                                const NoiseSchedule& schedule, Rng& rng);

    // Batched noise prediction; columns are samples.
    Eigen::MatrixXd eps(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                        int n) const;
    Eigen::MatrixXd eps(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                        const Eigen::VectorXi& ns) const;
};

// Full reverse trajectory for a batch of states. actions[n] holds a^n;
// noises[n] is the draw used stepping n -> n-1 (noises[0] stays empty).
struct DiffusionPath {
    Eigen::MatrixXd states;
    std::vector<Eigen::MatrixXd> actions;
    std::vector<Eigen::MatrixXd> noises;

    int step_count() const { return static_cast<int>(actions.size()) - 1; }
};

// Network input [state; action; embed(n)] as one matrix, shared by the
// denoiser and the actor update (which needs the trace).
Eigen::MatrixXd assemble_policy_input(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                                      const Eigen::MatrixXd& actions, const Eigen::VectorXi& ns);

// q_{n|0}: a^n = sqrt(abar_n) a0 + sqrt(1-abar_n) eps
Eigen::MatrixXd forward_sample(const NoiseSchedule& s, const Eigen::MatrixXd& a0, int n,
                               const Eigen::MatrixXd& eps);
Eigen::MatrixXd forward_sample(const NoiseSchedule& s, const Eigen::MatrixXd& a0,
                               const Eigen::VectorXi& ns, const Eigen::MatrixXd& eps);
// q_{n|m} for 0 <= m < n: one more diffusion leg from an intermediate sample.
Eigen::MatrixXd forward_sample_between(const NoiseSchedule& s, const Eigen::MatrixXd& am, int m,
                                       int n, const Eigen::MatrixXd& eps);

// Reverse mean mu_n = (a^n - beta_n / sqrt(1-abar_n) * eps_hat) / sqrt(alpha_n).
Eigen::MatrixXd reverse_mean(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, int n);
Eigen::MatrixXd reverse_mean(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, const Eigen::VectorXi& ns);

// One stochastic reverse step n -> n-1 given the noise draw; applies the
// schedule's sample clipping.
Eigen::MatrixXd reverse_step(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, int n, const Eigen::MatrixXd& noise);
Eigen::MatrixXd reverse_step(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& an, const Eigen::VectorXi& ns,
                             const Eigen::MatrixXd& noise);

DiffusionPath ddpm_generate(const DiffusionPolicy& p, const Eigen::MatrixXd& states, Rng& rng);

// Deterministic coarse sampler (visualization only): jumps n -> n-stride via
// the predicted clean sample. stride = steps collapses to one jump.
Eigen::MatrixXd ddim_generate(const DiffusionPolicy& p, const Eigen::MatrixXd& states, int stride);

// Denoising regression loss E ||eps_hat - eps||^2 on (state, clean action)
// pairs; n ~ U[1, N] and eps ~ N(0, I) are drawn per column.
using EpsFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& states,
                                            const Eigen::MatrixXd& actions,
                                            const Eigen::VectorXi& ns)>;
double behavior_noise_loss_with(const NoiseSchedule& s, const EpsFn& eps_fn,
                                const Eigen::MatrixXd& states, const Eigen::MatrixXd& a0,
                                Rng& rng);
double behavior_noise_loss(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                           const Eigen::MatrixXd& a0, Rng& rng);
// Loss plus parameter gradient, for the pretraining loop.
double behavior_noise_loss_grad(const DiffusionPolicy& p, const Eigen::MatrixXd& states,
                                const Eigen::MatrixXd& a0, Rng& rng, Eigen::VectorXd& grad);

// Per-step divergence l_n(a^n) = ||mu_pi - mu_nu||^2 / (2 sigma_n^2).
Eigen::VectorXd kl_step(const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                        const Eigen::MatrixXd& states, const Eigen::MatrixXd& an, int n);
Eigen::VectorXd kl_step(const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                        const Eigen::MatrixXd& states, const Eigen::MatrixXd& an,
                        const Eigen::VectorXi& ns);

// Sum of kl_step over n = 1..N along a path generated under pi. The shared
// standard-normal start contributes nothing and is excluded.
Eigen::VectorXd pathwise_kl(const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                            const DiffusionPath& path);

}  // namespace bdpo
