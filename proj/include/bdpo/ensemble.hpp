// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bdpo/mlp.hpp"
#include "bdpo/optim.hpp"
#include "bdpo/rng.hpp"
#include "bdpo/schedule.hpp"

namespace bdpo {

// mean - rho * std over ensemble values (population std, divide by K).
// One column per batch element; rho = 0 gives the plain mean.
Eigen::VectorXd lcb(const Eigen::MatrixXd& member_values, double rho);
double lcb1(const Eigen::VectorXd& member_values, double rho);
// d lcb / d value_k, used for reparameterized actor gradients. At zero
// spread the std term gets a zero subgradient.
Eigen::VectorXd lcb_weights(const Eigen::VectorXd& member_values, double rho);

// K independently initialized critics with EMA target copies. Role decides
// the input encoding: Q sees [state; action], the diffusion value also gets
// the step embedding.
struct ValueEnsemble {
    enum class Role { q, diffusion_v };

    Role role = Role::q;
    int state_dim = 0;
    int action_dim = 0;
    double rho = 0.0;
    double ema_rate = 0.005;
    std::vector<Mlp> members;
    std::vector<Mlp> targets;
    std::vector<AdamState> opt;

    static ValueEnsemble make(Role role, int state_dim, int action_dim,
                              const std::vector<int>& hidden, int count, double rho,
                              double ema_rate, const AdamConfig& adam, Rng& rng);

    int size() const { return static_cast<int>(members.size()); }

    Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                   const Eigen::VectorXi* ns) const;

    // K x B value matrices. Evaluation never mutates the ensemble.
    Eigen::MatrixXd eval_members(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                 const Eigen::VectorXi* ns = nullptr) const;
    Eigen::MatrixXd eval_targets(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                 const Eigen::VectorXi* ns = nullptr) const;

    void ema_step();
};

}  // namespace bdpo
