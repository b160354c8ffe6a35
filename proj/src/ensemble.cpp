// SPDX-License-Identifier: Apache-2.0
#include "bdpo/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace bdpo {

Eigen::VectorXd lcb(const Eigen::MatrixXd& member_values, double rho) {
    if (member_values.rows() == 0) throw std::invalid_argument("lcb: empty ensemble");
    const double k = static_cast<double>(member_values.rows());
    Eigen::RowVectorXd mean = member_values.colwise().mean();
    if (rho == 0.0) return mean.transpose();
    Eigen::RowVectorXd var =
        (member_values.rowwise() - mean).array().square().colwise().sum() / k;
    return (mean - rho * var.cwiseSqrt()).transpose();
}

double lcb1(const Eigen::VectorXd& member_values, double rho) {
    return lcb(member_values, rho)(0);  // a K-vector is a K x 1 batch
}

Eigen::VectorXd lcb_weights(const Eigen::VectorXd& member_values, double rho) {
    const Eigen::Index k = member_values.size();
    if (k == 0) throw std::invalid_argument("lcb_weights: empty ensemble");
    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    if (rho == 0.0) return w;
    const double mean = member_values.mean();
    const double sd =
        std::sqrt((member_values.array() - mean).square().sum() / static_cast<double>(k));
    if (sd < 1e-12) return w;
    w -= (rho / (static_cast<double>(k) * sd)) * (member_values.array() - mean).matrix();
    return w;
}

ValueEnsemble ValueEnsemble::make(Role role, int state_dim, int action_dim,
                                  const std::vector<int>& hidden, int count, double rho,
                                  double ema_rate, const AdamConfig& adam, Rng& rng) {
    if (count < 1) throw std::invalid_argument("ValueEnsemble::make: need at least one member");
    ValueEnsemble e;
    e.role = role;
    e.state_dim = state_dim;
    e.action_dim = action_dim;
    e.rho = rho;
    e.ema_rate = ema_rate;
    std::vector<int> widths;
    widths.push_back(state_dim + action_dim + (role == Role::diffusion_v ? kTimeEmbedDim : 0));
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    for (int k = 0; k < count; ++k) {
        e.members.push_back(Mlp::make(widths, rng));
        e.targets.push_back(e.members.back());  // targets start as exact copies
        e.opt.emplace_back(adam, e.members.back().param_count());
    }
    return e;
}

Eigen::MatrixXd ValueEnsemble::assemble_input(const Eigen::MatrixXd& states,
                                              const Eigen::MatrixXd& actions,
                                              const Eigen::VectorXi* ns) const {
    if (states.rows() != state_dim || actions.rows() != action_dim ||
        states.cols() != actions.cols())
        throw std::invalid_argument("ValueEnsemble: batch shape mismatch");
    const bool embed = role == Role::diffusion_v;
    if (embed && (ns == nullptr || ns->size() != actions.cols()))
        throw std::invalid_argument("ValueEnsemble: diffusion value needs one step per column");
    Eigen::MatrixXd in(state_dim + action_dim + (embed ? kTimeEmbedDim : 0), actions.cols());
    in.topRows(state_dim) = states;
    in.middleRows(state_dim, action_dim) = actions;
    if (embed)
        for (Eigen::Index c = 0; c < actions.cols(); ++c)
            in.col(c).tail(kTimeEmbedDim) = timestep_embedding((*ns)(c), kTimeEmbedDim);
    return in;
}

namespace {
Eigen::MatrixXd eval_nets(const std::vector<Mlp>& nets, const Eigen::MatrixXd& in) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(nets.size()), in.cols());
    for (std::size_t k = 0; k < nets.size(); ++k) out.row(k) = nets[k].forward(in);
    return out;
}
}  // namespace

Eigen::MatrixXd ValueEnsemble::eval_members(const Eigen::MatrixXd& states,
                                            const Eigen::MatrixXd& actions,
                                            const Eigen::VectorXi* ns) const {
    return eval_nets(members, assemble_input(states, actions, ns));
}

Eigen::MatrixXd ValueEnsemble::eval_targets(const Eigen::MatrixXd& states,
                                            const Eigen::MatrixXd& actions,
                                            const Eigen::VectorXi* ns) const {
    return eval_nets(targets, assemble_input(states, actions, ns));
}

void ValueEnsemble::ema_step() {
    for (int k = 0; k < size(); ++k) ema_update(targets[k].params, members[k].params, ema_rate);
}

}  // namespace bdpo
