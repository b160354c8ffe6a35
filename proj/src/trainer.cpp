// SPDX-License-Identifier: Apache-2.0
#include "bdpo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bdpo/errors.hpp"

namespace bdpo {

namespace {

Eigen::VectorXi random_steps(const NoiseSchedule& s, Eigen::Index count, Rng& rng) {
    Eigen::VectorXi ns(count);
    for (Eigen::Index i = 0; i < count; ++i) ns(i) = rng.uniform_int(1, s.steps);
    return ns;
}

// Gather column subsets for the split between the n = 1 boundary and n >= 2.
std::vector<Eigen::Index> columns_where(const Eigen::VectorXi& ns, bool boundary) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < ns.size(); ++i)
        if ((ns(i) == 1) == boundary) idx.push_back(i);
    return idx;
}

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = m.col(idx[j]);
    return out;
}

}  // namespace

Eigen::VectorXd q_target(const TrainConfig& cfg, const ValueEnsemble& q,
                         const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                         const TransitionBatch& batch, Rng& rng) {
    const Eigen::Index B = batch.rewards.size();
    if ((batch.dones.array() == 1.0).all()) return batch.rewards;  // no bootstrap term

    const int candidates = cfg.max_q_backup ? cfg.maxq_candidates : 1;
    Eigen::MatrixXd best;  // K x B, per-member best bootstrap bracket
    for (int m = 0; m < candidates; ++m) {
        DiffusionPath path = ddpm_generate(pi, batch.next_states, rng);
        Eigen::VectorXd kl_sum = pathwise_kl(pi, nu, path);
        Eigen::MatrixXd bracket = q.eval_targets(batch.next_states, path.actions[0]);
        bracket.rowwise() -= (cfg.eta * kl_sum).transpose();
        best = (m == 0) ? bracket : best.cwiseMax(bracket);
    }
    Eigen::VectorXd boot = lcb(best, cfg.rho);
    Eigen::VectorXd y =
        batch.rewards.array() + cfg.gamma * (1.0 - batch.dones.array()) * boot.array();
    if (!y.allFinite()) {
        for (Eigen::Index i = 0; i < B; ++i)
            if (!std::isfinite(y(i))) {
                std::ostringstream msg;
                msg << "q_target: non-finite target at column " << i << " (r=" << batch.rewards(i)
                    << ", done=" << batch.dones(i) << ", gamma=" << cfg.gamma
                    << ", bootstrap=" << boot(i) << ")";
                throw NumericError(msg.str());
            }
    }
    return y;
}

Eigen::VectorXd v_target(const TrainConfig& cfg, const ValueEnsemble& v, const ValueEnsemble& q,
                         const DiffusionPolicy& pi, const DiffusionPolicy& nu,
                         const Eigen::MatrixXd& states, const Eigen::VectorXi& ns,
                         const Eigen::MatrixXd& an, Rng& rng) {
    const Eigen::Index B = an.cols();
    Eigen::MatrixXd mu_pi = reverse_mean(pi, states, an, ns);
    Eigen::MatrixXd mu_nu = reverse_mean(nu, states, an, ns);
    Eigen::VectorXd penalty(B), sig(B);
    for (Eigen::Index c = 0; c < B; ++c) {
        sig(c) = pi.schedule.sigma_at(ns(c));
        penalty(c) = (mu_pi.col(c) - mu_nu.col(c)).squaredNorm() / (2.0 * sig(c) * sig(c));
    }

    const auto at_boundary = columns_where(ns, true);
    const auto interior = columns_where(ns, false);
    const Eigen::MatrixXd s_boundary = gather_cols(states, at_boundary);
    const Eigen::MatrixXd s_interior = gather_cols(states, interior);
    Eigen::VectorXi prev_ns(static_cast<Eigen::Index>(interior.size()));
    for (std::size_t j = 0; j < interior.size(); ++j) prev_ns(j) = ns(interior[j]) - 1;

    const int draws = std::max(1, cfg.value_noise_samples);
    Eigen::VectorXd boot = Eigen::VectorXd::Zero(B);
    Eigen::MatrixXd prev(an.rows(), B);  // a^{n-1} under the actor's kernel
    Eigen::MatrixXd xi(an.rows(), B);
    for (int d = 0; d < draws; ++d) {
        rng.fill_normal(xi);
        for (Eigen::Index c = 0; c < B; ++c) prev.col(c) = mu_pi.col(c) + sig(c) * xi.col(c);
        if (pi.schedule.clip_samples)
            prev = prev.array().min(pi.schedule.clip_hi).max(pi.schedule.clip_lo);
        if (!at_boundary.empty()) {
            Eigen::VectorXd vals =
                lcb(q.eval_targets(s_boundary, gather_cols(prev, at_boundary)), cfg.rho);
            for (std::size_t j = 0; j < at_boundary.size(); ++j) boot(at_boundary[j]) += vals(j);
        }
        if (!interior.empty()) {
            Eigen::VectorXd vals =
                lcb(v.eval_targets(s_interior, gather_cols(prev, interior), &prev_ns), cfg.rho);
            for (std::size_t j = 0; j < interior.size(); ++j) boot(interior[j]) += vals(j);
        }
    }
    Eigen::VectorXd y = boot / static_cast<double>(draws) - cfg.eta * penalty;
    if (!y.allFinite()) {
        for (Eigen::Index i = 0; i < B; ++i)
            if (!std::isfinite(y(i))) {
                std::ostringstream msg;
                msg << "v_target: non-finite target at column " << i << " (n=" << ns(i)
                    << ", penalty=" << penalty(i) << ", eta=" << cfg.eta << ")";
                throw NumericError(msg.str());
            }
    }
    return y;
}

double critic_update(ValueEnsemble& ens, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& actions, const Eigen::VectorXi* ns,
                     const Eigen::VectorXd& y) {
    if (!y.allFinite()) throw NumericError("critic_update: non-finite regression target");
    const Eigen::MatrixXd input = ens.assemble_input(states, actions, ns);
    const double B = static_cast<double>(y.size());
    double loss = 0.0;
    Eigen::VectorXd grad;
    MlpTrace trace;
    for (int k = 0; k < ens.size(); ++k) {
        Eigen::MatrixXd pred = mlp_forward_trace(ens.members[k], input, trace);
        Eigen::MatrixXd err = pred.row(0).transpose() - y;
        loss += err.squaredNorm() / B;
        Eigen::MatrixXd upstream = (2.0 / B) * err.transpose();
        mlp_backward(ens.members[k], trace, upstream, grad);
        ens.opt[k].apply(ens.members[k].params, grad);
    }
    ens.ema_step();
    return loss;
}

ValueProbe ensemble_value_probe(const ValueEnsemble& v, const ValueEnsemble& q, double rho) {
    ValueProbe probe;
    probe.eval = [&v, &q, rho](const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                               const Eigen::VectorXi& ns) {
        const Eigen::Index B = actions.cols();
        Eigen::VectorXd vals(B);
        Eigen::MatrixXd dvdx = Eigen::MatrixXd::Zero(actions.rows(), B);
        auto run = [&](const ValueEnsemble& ens, const std::vector<Eigen::Index>& idx,
                       const Eigen::VectorXi* sub_ns) {
            if (idx.empty()) return;
            const Eigen::MatrixXd sub_s = gather_cols(states, idx);
            const Eigen::MatrixXd sub_a = gather_cols(actions, idx);
            const Eigen::MatrixXd input = ens.assemble_input(sub_s, sub_a, sub_ns);
            const Eigen::Index n = input.cols();
            const int K = ens.size();
            std::vector<MlpTrace> traces(K);
            Eigen::MatrixXd values(K, n);
            for (int k = 0; k < K; ++k)
                values.row(k) = mlp_forward_trace(ens.targets[k], input, traces[k]);
            Eigen::MatrixXd weights(K, n);
            for (Eigen::Index c = 0; c < n; ++c)
                weights.col(c) = lcb_weights(values.col(c), rho);
            Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(input.rows(), n);
            Eigen::VectorXd grad_unused;
            Eigen::MatrixXd dx;
            for (int k = 0; k < K; ++k) {
                mlp_backward(ens.targets[k], traces[k], weights.row(k), grad_unused, &dx);
                dinput += dx;
            }
            const Eigen::VectorXd sub_vals = lcb(values, rho);
            for (std::size_t j = 0; j < idx.size(); ++j) {
                vals(idx[j]) = sub_vals(j);
                dvdx.col(idx[j]) =
                    dinput.col(j).segment(ens.state_dim, ens.action_dim);
            }
        };
        // Step 0 means the chain has closed; the Q-ensemble takes over there.
        std::vector<Eigen::Index> q_idx, v_idx;
        for (Eigen::Index i = 0; i < ns.size(); ++i)
            (ns(i) == 0 ? q_idx : v_idx).push_back(i);
        run(q, q_idx, nullptr);
        if (!v_idx.empty()) {
            Eigen::VectorXi sub_ns(static_cast<Eigen::Index>(v_idx.size()));
            for (std::size_t j = 0; j < v_idx.size(); ++j) sub_ns(j) = ns(v_idx[j]);
            run(v, v_idx, &sub_ns);
        }
        return std::make_pair(vals, dvdx);
    };
    return probe;
}

double actor_loss_grad(const TrainConfig& cfg, const DiffusionPolicy& pi,
                       const DiffusionPolicy& nu, const ValueProbe& value,
                       const Eigen::MatrixXd& states, const Eigen::VectorXi& ns,
                       const Eigen::MatrixXd& an, Rng& rng, Eigen::VectorXd& grad) {
    const Eigen::Index B = an.cols();
    const NoiseSchedule& sched = pi.schedule;
    MlpTrace trace;
    Eigen::MatrixXd eps_hat =
        mlp_forward_trace(pi.eps_net, assemble_policy_input(pi, states, an, ns), trace);
    if (!eps_hat.allFinite()) throw NumericError("actor_loss: non-finite actor output");

    Eigen::VectorXd c2(B), sigma(B);
    Eigen::MatrixXd mu_pi(an.rows(), B);
    for (Eigen::Index c = 0; c < B; ++c) {
        const int n = ns(c);
        const double c1 = 1.0 / std::sqrt(sched.alpha_at(n));
        c2(c) = sched.beta_at(n) / (std::sqrt(1.0 - sched.alpha_bar_at(n)) *
                                    std::sqrt(sched.alpha_at(n)));
        sigma(c) = sched.sigma_at(n);
        mu_pi.col(c) = c1 * an.col(c) - c2(c) * eps_hat.col(c);
    }
    Eigen::MatrixXd mu_nu = reverse_mean(nu, states, an, ns);

    const Eigen::VectorXi prev_ns = ns.array() - 1;
    const int draws = std::max(1, cfg.actor_noise_samples);
    Eigen::VectorXd vbar = Eigen::VectorXd::Zero(B);
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(an.rows(), B);
    Eigen::MatrixXd xi(an.rows(), B), x(an.rows(), B);
    for (int d = 0; d < draws; ++d) {
        rng.fill_normal(xi);
        for (Eigen::Index c = 0; c < B; ++c) x.col(c) = mu_pi.col(c) + sigma(c) * xi.col(c);
        Eigen::MatrixXd pass = Eigen::MatrixXd::Ones(an.rows(), B);  // clip subgradient mask
        if (sched.clip_samples) {
            pass = ((x.array() > sched.clip_lo) && (x.array() < sched.clip_hi)).cast<double>();
            x = x.array().min(sched.clip_hi).max(sched.clip_lo);
        }
        auto [vals, dvdx] = value.eval(states, x, prev_ns);
        vbar += vals;
        dv += dvdx.cwiseProduct(pass);
    }
    vbar /= static_cast<double>(draws);
    dv /= static_cast<double>(draws);

    double loss = 0.0;
    Eigen::MatrixXd dmu(an.rows(), B);
    for (Eigen::Index c = 0; c < B; ++c) {
        const double s2 = sigma(c) * sigma(c);
        const double pen = (mu_pi.col(c) - mu_nu.col(c)).squaredNorm() / (2.0 * s2);
        loss += cfg.eta * pen - vbar(c);
        dmu.col(c) = (cfg.eta / s2) * (mu_pi.col(c) - mu_nu.col(c)) - dv.col(c);
    }
    loss /= static_cast<double>(B);
    // dL/deps_hat = -c2 * dL/dmu, averaged over the batch
    Eigen::MatrixXd upstream(an.rows(), B);
    for (Eigen::Index c = 0; c < B; ++c)
        upstream.col(c) = (-c2(c) / static_cast<double>(B)) * dmu.col(c);
    mlp_backward(pi.eps_net, trace, upstream, grad);
    return loss;
}

int pick_best_action(const Eigen::VectorXd& scores) {
    if (scores.size() == 0) throw std::invalid_argument("pick_best_action: no candidates");
    int best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i)
        if (scores(i) > scores(best)) best = static_cast<int>(i);
    return best;
}

EvalStats evaluate_policy(const DiffusionPolicy& pi, const ValueEnsemble& q, const ToyMdp& env,
                          const Eigen::VectorXd& state_mean, const Eigen::VectorXd& state_std,
                          int candidates, int episodes, Rng& rng) {
    if (candidates < 1 || episodes < 1)
        throw std::invalid_argument("evaluate_policy: need candidates >= 1 and episodes >= 1");
    Eigen::VectorXd returns(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        Eigen::Vector2d s = env.reset(rng);
        double ret = 0.0;
        for (int t = 0; t < env.horizon; ++t) {
            Eigen::Vector2d zs = (s - state_mean).cwiseQuotient(state_std);
            Eigen::MatrixXd rep = zs.replicate(1, candidates);
            DiffusionPath path = ddpm_generate(pi, rep, rng);
            Eigen::VectorXd scores = lcb(q.eval_members(rep, path.actions[0]), q.rho);
            const int pick = pick_best_action(scores);
            auto [next, reward] = env.step(s, path.actions[0].col(pick), rng);
            ret += reward;
            s = next;
        }
        returns(ep) = ret;
    }
    EvalStats st;
    st.mean = returns.mean();
    st.stddev = std::sqrt((returns.array() - st.mean).square().sum() / episodes);
    return st;
}

DiffusionPolicy pretrain_behavior(const TrainConfig& cfg, const NoiseSchedule& schedule,
                                  const OfflineDataset& data, MetricsWriter* metrics, Rng& rng) {
    data.validate();
    Rng init_rng = rng.split(1), batch_rng = rng.split(2), noise_rng = rng.split(3);
    DiffusionPolicy policy = DiffusionPolicy::make(data.state_dim, data.action_dim,
                                                   cfg.policy_hidden, schedule, init_rng);
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.behavior_lr;
    // annealing to zero sharpens the final fit; constant-lr Adam leaves
    // O(lr) parameter bounce that blurs the small-noise denoising steps
    adam_cfg.cosine_horizon = cfg.pretrain_steps;
    AdamState opt(adam_cfg, policy.eps_net.param_count());
    Eigen::VectorXd grad;
    const auto t0 = std::chrono::steady_clock::now();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (long step = 1; step <= cfg.pretrain_steps; ++step) {
        Eigen::MatrixXd s(data.state_dim, cfg.batch_size), a(data.action_dim, cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
            const Eigen::Index idx = batch_rng.uniform_index(data.size());
            s.col(i) = data.states.col(idx);
            a.col(i) = data.actions.col(idx);
        }
        const double loss = behavior_noise_loss_grad(policy, s, a, noise_rng, grad);
        opt.apply(policy.eps_net.params, grad);
        if (metrics && (step % cfg.log_interval == 0 || step == cfg.pretrain_steps)) {
            const double wall = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0).count();
            metrics->row(step, nan, nan, loss, nan, nan, nan, wall);
        }
        if (metrics && step % cfg.checkpoint_interval == 0) metrics->flush();
    }
    if (metrics) metrics->flush();
    return policy;
}

Trainer::Trainer(TrainConfig cfg_in, const NoiseSchedule& schedule_in, OfflineDataset data_in,
                 DiffusionPolicy behavior_in)
    : cfg(std::move(cfg_in)),
      schedule(schedule_in),
      data(std::move(data_in)),
      behavior(std::move(behavior_in)),
      actor(behavior),  // line-3 initialization: the actor starts as the clone
      batch_rng_(Rng(cfg.seed).split(11)),
      target_rng_(Rng(cfg.seed).split(12)),
      actor_rng_(Rng(cfg.seed).split(13)),
      metrics_rng_(Rng(cfg.seed).split(14)) {
    data.validate();
    if (!behavior.schedule.same_schedule(schedule))
        throw ConfigError("trainer: behavior checkpoint uses a different schedule");
    actor_ema = EmaTracker(cfg.actor_ema_rate, actor.eps_net.params);
    const long updates =
        std::max(1L, (cfg.train_steps - cfg.warmup_steps) / cfg.actor_update_interval);
    AdamConfig actor_adam;
    actor_adam.lr = cfg.actor_lr;
    actor_adam.clip_norm = cfg.actor_grad_clip;
    actor_adam.cosine_horizon = cfg.actor_lr_cosine ? updates : 0;
    actor_opt = AdamState(actor_adam, actor.eps_net.param_count());
    AdamConfig value_adam;
    value_adam.lr = cfg.value_lr;
    value_adam.cosine_horizon = cfg.value_lr_cosine ? cfg.train_steps : 0;
    Rng init_rng = Rng(cfg.seed).split(15);
    qens = ValueEnsemble::make(ValueEnsemble::Role::q, data.state_dim, data.action_dim,
                               cfg.value_hidden, cfg.ensemble_size, cfg.rho, cfg.value_ema_rate,
                               value_adam, init_rng);
    vens = ValueEnsemble::make(ValueEnsemble::Role::diffusion_v, data.state_dim, data.action_dim,
                               cfg.value_hidden, cfg.ensemble_size, cfg.rho, cfg.value_ema_rate,
                               value_adam, init_rng);
}

TransitionBatch Trainer::sample_batch() {
    TransitionBatch b;
    b.states.resize(data.state_dim, cfg.batch_size);
    b.actions.resize(data.action_dim, cfg.batch_size);
    b.rewards.resize(cfg.batch_size);
    b.next_states.resize(data.state_dim, cfg.batch_size);
    b.dones.resize(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
        const Eigen::Index idx = batch_rng_.uniform_index(data.size());
        b.states.col(i) = data.states.col(idx);
        b.actions.col(i) = data.actions.col(idx);
        b.rewards(i) = data.rewards(idx);
        b.next_states.col(i) = data.next_states.col(idx);
        b.dones(i) = data.dones(idx);
    }
    return b;
}

void Trainer::train_step() {
    ++step;
    TransitionBatch batch = sample_batch();
    Eigen::VectorXd y_q = q_target(cfg, qens, actor, behavior, batch, target_rng_);
    last_q_loss = critic_update(qens, batch.states, batch.actions, nullptr, y_q);

    // Extend the minibatch with (n, a^n) ~ U[1, N] x q_{n|0}.
    Eigen::VectorXi ns = random_steps(schedule, cfg.batch_size, target_rng_);
    Eigen::MatrixXd eps(data.action_dim, cfg.batch_size);
    target_rng_.fill_normal(eps);
    Eigen::MatrixXd an = forward_sample(schedule, batch.actions, ns, eps);
    Eigen::VectorXd y_v = v_target(cfg, vens, qens, actor, behavior, batch.states, ns, an,
                                   target_rng_);
    last_v_loss = critic_update(vens, batch.states, an, &ns, y_v);

    if (step > cfg.warmup_steps && step % cfg.actor_update_interval == 0) {
        ValueProbe probe = ensemble_value_probe(vens, qens, cfg.rho);
        Eigen::VectorXd grad;
        last_actor_loss = actor_loss_grad(cfg, actor, behavior, probe, batch.states, ns, an,
                                          actor_rng_, grad);
        actor_opt.apply(actor.eps_net.params, grad);
        actor_ema.update(actor.eps_net.params);
    }
}

DiffusionPolicy Trainer::actor_ema_policy() const {
    DiffusionPolicy p = actor;
    p.eps_net.params = actor_ema.shadow;
    return p;
}

double Trainer::mean_pathwise_kl_probe() {
    const int count = std::min<Eigen::Index>(32, data.size());
    Eigen::MatrixXd s(data.state_dim, count);
    for (int i = 0; i < count; ++i)
        s.col(i) = data.states.col(metrics_rng_.uniform_index(data.size()));
    DiffusionPath path = ddpm_generate(actor, s, metrics_rng_);
    return pathwise_kl(actor, behavior, path).mean();
}

void Trainer::run(MetricsWriter* metrics, const Evaluator& evaluator,
                  const CheckpointSink& checkpoint_sink) {
    const auto t0 = std::chrono::steady_clock::now();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double eval_mean = nan, eval_std = nan;
    Rng eval_rng = Rng(cfg.seed).split(16);
    while (step < cfg.train_steps) {
        train_step();
        if (evaluator && (step % cfg.eval_interval == 0 || step == cfg.train_steps)) {
            const EvalStats st = evaluator(actor_ema_policy(), eval_rng);
            eval_mean = st.mean;
            eval_std = st.stddev;
        }
        if (metrics && (step % cfg.log_interval == 0 || step == cfg.train_steps)) {
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            metrics->row(step, last_q_loss, last_v_loss, last_actor_loss,
                         mean_pathwise_kl_probe(), eval_mean, eval_std, wall);
        }
        if (step % cfg.checkpoint_interval == 0 || step == cfg.train_steps) {
            if (metrics) metrics->flush();
            if (checkpoint_sink) checkpoint_sink(step, *this);
        }
    }
}

Checkpoint Trainer::to_checkpoint() const {
    Checkpoint ck;
    ck.meta["kind"] = "train";
    ck.meta["step"] = step;
    ck.meta["state_dim"] = data.state_dim;
    ck.meta["action_dim"] = data.action_dim;
    ck.meta["ensemble_size"] = cfg.ensemble_size;
    ck.meta["schedule"] = {{"steps", schedule.steps},
                           {"beta_min", schedule.beta_min},
                           {"beta_max", schedule.beta_max},
                           {"clip_samples", schedule.clip_samples},
                           {"clip_lo", schedule.clip_lo},
                           {"clip_hi", schedule.clip_hi}};
    checkpoint_put_mlp(ck, "behavior", behavior.eps_net);
    checkpoint_put_mlp(ck, "actor", actor.eps_net);
    checkpoint_put_ema(ck, "actor", actor_ema, actor.eps_net.widths);
    checkpoint_put_adam(ck, "actor", actor_opt, actor.eps_net.widths);
    for (int k = 0; k < cfg.ensemble_size; ++k) {
        const std::string qk = "q." + std::to_string(k), vk = "v." + std::to_string(k);
        checkpoint_put_mlp(ck, qk, qens.members[k]);
        checkpoint_put_mlp(ck, qk + ".target", qens.targets[k]);
        checkpoint_put_adam(ck, qk, qens.opt[k], qens.members[k].widths);
        checkpoint_put_mlp(ck, vk, vens.members[k]);
        checkpoint_put_mlp(ck, vk + ".target", vens.targets[k]);
        checkpoint_put_adam(ck, vk, vens.opt[k], vens.members[k].widths);
    }
    return ck;
}

Trainer Trainer::from_checkpoint(const Checkpoint& ck, TrainConfig cfg, OfflineDataset data) {
    const auto& js = ck.meta.at("schedule");
    NoiseSchedule schedule =
        build_vp_schedule(js.at("steps"), js.at("beta_min"), js.at("beta_max"),
                          js.at("clip_samples"), js.at("clip_lo"), js.at("clip_hi"));
    DiffusionPolicy behavior;
    behavior.schedule = schedule;
    behavior.state_dim = ck.meta.at("state_dim");
    behavior.action_dim = ck.meta.at("action_dim");
    behavior.eps_net = checkpoint_take_mlp(ck, "behavior");
    Trainer t(std::move(cfg), schedule, std::move(data), behavior);
    t.step = ck.meta.at("step");
    t.actor.eps_net = checkpoint_take_mlp(ck, "actor");
    t.actor_ema = checkpoint_take_ema(ck, "actor", t.actor.eps_net.widths);
    t.actor_ema.rate = t.cfg.actor_ema_rate;
    t.actor_opt = checkpoint_take_adam(ck, "actor", t.actor.eps_net.widths);
    for (int k = 0; k < t.cfg.ensemble_size; ++k) {
        const std::string qk = "q." + std::to_string(k), vk = "v." + std::to_string(k);
        t.qens.members[k] = checkpoint_take_mlp(ck, qk);
        t.qens.targets[k] = checkpoint_take_mlp(ck, qk + ".target");
        t.qens.opt[k] = checkpoint_take_adam(ck, qk, t.qens.members[k].widths);
        t.vens.members[k] = checkpoint_take_mlp(ck, vk);
        t.vens.targets[k] = checkpoint_take_mlp(ck, vk + ".target");
        t.vens.opt[k] = checkpoint_take_adam(ck, vk, t.vens.members[k].widths);
    }
    return t;
}

}  // namespace bdpo
