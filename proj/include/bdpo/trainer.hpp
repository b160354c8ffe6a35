// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "bdpo/checkpoint.hpp"
#include "bdpo/datasets.hpp"
#include "bdpo/diffusion.hpp"
#include "bdpo/ensemble.hpp"
#include "bdpo/metrics.hpp"
#include "bdpo/toymdp.hpp"

namespace bdpo {

struct TrainConfig {
    double eta = 0.2;
    double rho = 0.5;
    double gamma = 0.99;
    int ensemble_size = 10;
    int batch_size = 256;
    long pretrain_steps = 50000;
    long train_steps = 100000;
    long warmup_steps = 5000;
    long actor_update_interval = 5;
    double behavior_lr = 3e-4;
    double value_lr = 3e-4;
    bool value_lr_cosine = false;
    int value_noise_samples = 1;
    int actor_noise_samples = 1;
    double actor_lr = 1e-4;
    bool actor_lr_cosine = true;
    double actor_grad_clip = 1.0;
    double actor_ema_rate = 5e-3;
    double value_ema_rate = 5e-3;
    bool max_q_backup = false;
    int maxq_candidates = 4;
    int eval_candidates = 10;
    int eval_episodes = 20;
    long eval_interval = 5000;
    long log_interval = 500;
    long checkpoint_interval = 25000;
    std::uint64_t seed = 1;
    std::vector<int> policy_hidden{96, 96, 96};
    std::vector<int> value_hidden{64, 64};
};

struct TransitionBatch {
    Eigen::MatrixXd states;       // state_dim x B
    Eigen::MatrixXd actions;      // action_dim x B
    Eigen::VectorXd rewards;      // B
    Eigen::MatrixXd next_states;  // state_dim x B
    Eigen::VectorXd dones;        // B
};

// Bootstrapped critic target: per member r + gamma (1 - done) (Qbar(s', a'^0)
// - eta * sum_n l_n(a'^n)) along a fresh actor path at s', then the LCB.
// With max-Q backup each member takes the max over `maxq_candidates` paths
// before the LCB. Terminal transitions reduce to r exactly.
Eigen::VectorXd q_target(const TrainConfig& cfg, const ValueEnsemble& q,
                         const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                         const TransitionBatch& batch, Rng& rng);

// Denoising-step target at (a^n, n): -eta * l_n(a^n) plus the LCB of
// Vbar(s, a^{n-1}, n-1) for n >= 2, or of Qbar(s, a^0) at the n = 1 boundary,
// with a^{n-1} drawn from the actor's reverse kernel. The bootstrap term
// averages `value_noise_samples` independent kernel draws; more draws cut
// the regression-target variance without biasing its mean.
Eigen::VectorXd v_target(const TrainConfig& cfg, const ValueEnsemble& v, const ValueEnsemble& q,
                         const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                         const Eigen::MatrixXd& states, const Eigen::VectorXi& ns,
                         const Eigen::MatrixXd& an, Rng& rng);

// One Adam step per member on the summed squared error against y, then the
// EMA target refresh (the only mutation of target parameters anywhere).
// Returns the pre-step loss sum_k mean_b (y_b - member_k(b))^2.
double critic_update(ValueEnsemble& ens, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& actions, const Eigen::VectorXi* ns,
                     const Eigen::VectorXd& y);

// Scalar value head used by the actor update: returns the LCB per column and
// its gradient with respect to the action input.
struct ValueProbe {
    std::function<std::pair<Eigen::VectorXd, Eigen::MatrixXd>(
        const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions, const Eigen::VectorXi& ns)>
        eval;
};
// Probe backed by the EMA targets: diffusion value at steps >= 1, Q at step 0.
ValueProbe ensemble_value_probe(const ValueEnsemble& v, const ValueEnsemble& q, double rho);

// Per-step actor objective eta * l_n(a^n) - value(s, mu_pi + sigma_n xi, n-1)
// with the value term averaged over `actor_noise_samples` reparameterized
// draws; gradients flow only through mu_pi. Returns the batch-mean loss and
// writes the parameter gradient.
double actor_loss_grad(const TrainConfig& cfg, const DiffusionPolicy& pi,
                       const DiffusionPolicy& nu, const ValueProbe& value,
                       const Eigen::MatrixXd& states, const Eigen::VectorXi& ns,
                       const Eigen::MatrixXd& an, Rng& rng, Eigen::VectorXd& grad);

// Lowest index wins ties, so candidate order is part of the contract.
int pick_best_action(const Eigen::VectorXd& scores);

struct EvalStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Rolls episodes in env; per step the policy proposes `candidates` actions
// and the Q-ensemble LCB picks one. States are normalized with the dataset
// stats before hitting any network. Returns undiscounted-return stats.
EvalStats evaluate_policy(const DiffusionPolicy& pi, const ValueEnsemble& q, const ToyMdp& env,
                          const Eigen::VectorXd& state_mean, const Eigen::VectorXd& state_std,
                          int candidates, int episodes, Rng& rng);

// Behavior cloning by denoising regression; returns the trained policy.
DiffusionPolicy pretrain_behavior(const TrainConfig& cfg, const NoiseSchedule& schedule,
                                  const OfflineDataset& data, MetricsWriter* metrics, Rng& rng);

// Two-timescale offline loop: critics every step, actor every interval after
// warmup, EMA copies trailing throughout. The behavior policy stays frozen.
class Trainer {
  public:
    Trainer(TrainConfig cfg, const NoiseSchedule& schedule, OfflineDataset data,
            DiffusionPolicy behavior);

    // Optional per-run hooks: evaluator maps the EMA actor to return stats,
    // checkpoint_sink persists state at the configured interval.
    using Evaluator = std::function<EvalStats(const DiffusionPolicy& actor_ema, Rng& rng)>;
    using CheckpointSink = std::function<void(long step, Trainer& trainer)>;

    void run(MetricsWriter* metrics, const Evaluator& evaluator = nullptr,
             const CheckpointSink& checkpoint_sink = nullptr);
    void train_step();

    DiffusionPolicy actor_ema_policy() const;
    Checkpoint to_checkpoint() const;
    static Trainer from_checkpoint(const Checkpoint& ck, TrainConfig cfg, OfflineDataset data);

    TrainConfig cfg;
    NoiseSchedule schedule;
    OfflineDataset data;
    DiffusionPolicy behavior;
    DiffusionPolicy actor;
    EmaTracker actor_ema;
    AdamState actor_opt;
    ValueEnsemble qens;
    ValueEnsemble vens;
    long step = 0;

    double last_q_loss = 0.0, last_v_loss = 0.0, last_actor_loss = 0.0;

  private:
    TransitionBatch sample_batch();
    double mean_pathwise_kl_probe();

    Rng batch_rng_, target_rng_, actor_rng_, metrics_rng_;
};

}  // namespace bdpo
