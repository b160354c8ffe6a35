// SPDX-License-Identifier: Apache-2.0
#include "bdpo/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdpo/errors.hpp"

namespace bdpo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// eta * log sum_i w_i exp(v_i / eta) with max-shift; zero weights are skipped
// so -inf values never poison the sum.
double soft_blend(const Eigen::VectorXd& w, const Eigen::VectorXd& v, double eta) {
    double peak = kNegInf;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) <= 0.0 || v(i) == kNegInf) continue;
        peak = std::max(peak, std::log(w(i)) + v(i) / eta);
    }
    if (peak == kNegInf) return kNegInf;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) <= 0.0 || v(i) == kNegInf) continue;
        acc += std::exp(std::log(w(i)) + v(i) / eta - peak);
    }
    return eta * (peak + std::log(acc));
}

Eigen::VectorXd softmax_shifted(const Eigen::VectorXd& logits) {
    const double peak = logits.maxCoeff();
    if (peak == kNegInf) throw NumericError("softmax over an empty support");
    Eigen::VectorXd p = (logits.array() - peak).exp();
    return p / p.sum();
}

}  // namespace

void DiscreteDiffusion::validate() const {
    const int S = states();
    if (S < 1) throw std::invalid_argument("discrete diffusion: empty grid");
    if (grid.size() != S || reward.size() != S)
        throw std::invalid_argument("discrete diffusion: grid/reward size mismatch");
    if (eta <= 0.0) throw std::invalid_argument("discrete diffusion: eta must be positive");
    if (nu0.minCoeff() < 0.0 || std::abs(nu0.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("discrete diffusion: nu0 is not a distribution");
    for (const auto& k : forward) {
        if (k.rows() != S || k.cols() != S)
            throw std::invalid_argument("discrete diffusion: kernel shape mismatch");
        if (k.minCoeff() < 0.0)
            throw std::invalid_argument("discrete diffusion: negative kernel entry");
        for (Eigen::Index r = 0; r < S; ++r)
            if (std::abs(k.row(r).sum() - 1.0) > 1e-12)
                throw std::invalid_argument("discrete diffusion: kernel row does not sum to 1");
    }
}

std::vector<Eigen::VectorXd> DiscreteDiffusion::marginals() const {
    std::vector<Eigen::VectorXd> m(steps() + 1);
    m[0] = nu0;
    for (int n = 1; n <= steps(); ++n) m[n] = forward[n - 1].transpose() * m[n - 1];
    return m;
}

DiscreteDiffusion random_discrete_instance(int states, int steps, double eta, Rng& rng) {
    if (states < 2 || steps < 1) throw std::invalid_argument("instance needs >= 2 states, >= 1 step");
    DiscreteDiffusion dd;
    dd.eta = eta;
    dd.grid = Eigen::VectorXd::LinSpaced(states, -1.0, 1.0);
    // Strictly positive masses keep every reverse posterior well defined.
    dd.nu0.resize(states);
    for (int i = 0; i < states; ++i) dd.nu0(i) = rng.uniform(0.1, 1.0);
    dd.nu0 /= dd.nu0.sum();
    dd.forward.resize(steps);
    for (int n = 0; n < steps; ++n) {
        Eigen::MatrixXd k(states, states);
        for (int r = 0; r < states; ++r) {
            for (int c = 0; c < states; ++c) k(r, c) = rng.uniform(0.1, 1.0);
            k.row(r) /= k.row(r).sum();
        }
        dd.forward[n] = k;
    }
    dd.reward.resize(states);
    for (int i = 0; i < states; ++i) dd.reward(i) = rng.uniform(-1.0, 1.0);
    return dd;
}

ReversePosterior discrete_reverse_posterior(const DiscreteDiffusion& dd, int n) {
    dd.validate();
    if (n < 1 || n > dd.steps())
        throw std::invalid_argument("reverse posterior: step out of range");
    const auto marg = dd.marginals();
    const int S = dd.states();
    ReversePosterior rp;
    rp.kernel.resize(S, S);
    rp.defined.assign(S, true);
    for (int j = 0; j < S; ++j) {
        if (marg[n](j) <= 0.0) {
            // No mass ever conditions here; keep the row usable but flagged.
            rp.defined[j] = false;
            rp.kernel.row(j).setConstant(1.0 / S);
            continue;
        }
        for (int i = 0; i < S; ++i)
            rp.kernel(j, i) = dd.forward[n - 1](i, j) * marg[n - 1](i) / marg[n](j);
    }
    return rp;
}

std::vector<Eigen::VectorXd> recursion_optimal_values(const DiscreteDiffusion& dd) {
    dd.validate();
    const int S = dd.states(), N = dd.steps();
    std::vector<Eigen::VectorXd> values(N + 1);
    values[0] = dd.reward;
    for (int n = 1; n <= N; ++n) {
        const ReversePosterior rp = discrete_reverse_posterior(dd, n);
        values[n].resize(S);
        for (int j = 0; j < S; ++j)
            values[n](j) =
                rp.defined[j] ? soft_blend(rp.kernel.row(j), values[n - 1], dd.eta) : kNegInf;
        for (int j = 0; j < S; ++j)
            if (std::isnan(values[n](j)) ||
                values[n](j) == std::numeric_limits<double>::infinity())
                throw NumericError("value recursion overflowed despite stabilization");
    }
    return values;
}

Eigen::VectorXd boltzmann_tilted_marginal(const DiscreteDiffusion& dd) {
    Eigen::VectorXd logits(dd.states());
    for (int i = 0; i < dd.states(); ++i)
        logits(i) =
            dd.nu0(i) > 0.0 ? std::log(dd.nu0(i)) + dd.reward(i) / dd.eta : kNegInf;
    return softmax_shifted(logits);
}

double tilted_marginal_check(const DiscreteDiffusion& dd) {
    const auto values = recursion_optimal_values(dd);
    const auto marg = dd.marginals();
    const int S = dd.states(), N = dd.steps();

    // The optimal reverse chain reproduces the forward chain started from the
    // tilted base, so its own terminal marginal (tilted nu_N) is the exact
    // composition start.
    Eigen::VectorXd logits(S);
    for (int j = 0; j < S; ++j)
        logits(j) = marg[N](j) > 0.0 && values[N](j) != kNegInf
                        ? std::log(marg[N](j)) + values[N](j) / dd.eta
                        : kNegInf;
    Eigen::VectorXd m = softmax_shifted(logits);

    for (int n = N; n >= 1; --n) {
        const ReversePosterior rp = discrete_reverse_posterior(dd, n);
        Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
        for (int j = 0; j < S; ++j) {
            if (m(j) <= 0.0 || !rp.defined[j]) continue;
            Eigen::VectorXd row_logits(S);
            for (int i = 0; i < S; ++i)
                row_logits(i) = rp.kernel(j, i) > 0.0 && values[n - 1](i) != kNegInf
                                    ? std::log(rp.kernel(j, i)) + values[n - 1](i) / dd.eta
                                    : kNegInf;
            next += m(j) * softmax_shifted(row_logits);
        }
        m = next;
    }
    return (m - boltzmann_tilted_marginal(dd)).lpNorm<Eigen::Infinity>();
}

DiscretePolicy discrete_behavior_policy(const DiscreteDiffusion& dd) {
    DiscretePolicy pol;
    pol.kernels.resize(dd.steps());
    for (int n = 1; n <= dd.steps(); ++n)
        pol.kernels[n - 1] = discrete_reverse_posterior(dd, n).kernel;
    return pol;
}

DiscretePolicy random_discrete_policy(const DiscreteDiffusion& dd, Rng& rng) {
    DiscretePolicy pol;
    pol.kernels.resize(dd.steps());
    const int S = dd.states();
    for (int n = 0; n < dd.steps(); ++n) {
        Eigen::MatrixXd k(S, S);
        for (int r = 0; r < S; ++r) {
            for (int c = 0; c < S; ++c) k(r, c) = rng.uniform(0.1, 1.0);
            k.row(r) /= k.row(r).sum();
        }
        pol.kernels[n] = k;
    }
    return pol;
}

std::vector<Eigen::VectorXd> discrete_policy_values(const DiscreteDiffusion& dd,
                                                    const DiscretePolicy& pol) {
    if (static_cast<int>(pol.kernels.size()) != dd.steps())
        throw std::invalid_argument("policy step count does not match the chain");
    const int S = dd.states(), N = dd.steps();
    std::vector<Eigen::VectorXd> values(N + 1);
    values[0] = dd.reward;
    for (int n = 1; n <= N; ++n) {
        const ReversePosterior rp = discrete_reverse_posterior(dd, n);
        values[n].resize(S);
        for (int j = 0; j < S; ++j) {
            if (!rp.defined[j]) {
                values[n](j) = kNegInf;
                continue;
            }
            double acc = 0.0;
            bool finite = true;
            for (int i = 0; i < S && finite; ++i) {
                const double p = pol.kernels[n - 1](j, i);
                if (p <= 0.0) continue;  // lim p->0 of p log p is 0
                const double q = rp.kernel(j, i);
                if (q <= 0.0 || values[n - 1](i) == kNegInf) {
                    finite = false;  // stepping outside the behavior support
                    continue;
                }
                acc += p * (values[n - 1](i) - dd.eta * (std::log(p) - std::log(q)));
            }
            values[n](j) = finite ? acc : kNegInf;
        }
    }
    return values;
}

DiscretePolicy discrete_policy_improve(const DiscreteDiffusion& dd,
                                       const std::vector<Eigen::VectorXd>& values) {
    if (static_cast<int>(values.size()) != dd.steps() + 1)
        throw std::invalid_argument("value table count does not match the chain");
    DiscretePolicy pol;
    pol.kernels.resize(dd.steps());
    const int S = dd.states();
    for (int n = 1; n <= dd.steps(); ++n) {
        const ReversePosterior rp = discrete_reverse_posterior(dd, n);
        Eigen::MatrixXd k(S, S);
        for (int j = 0; j < S; ++j) {
            if (!rp.defined[j]) {
                k.row(j).setConstant(1.0 / S);
                continue;
            }
            Eigen::VectorXd logits(S);
            for (int i = 0; i < S; ++i)
                logits(i) = rp.kernel(j, i) > 0.0 && values[n - 1](i) != kNegInf
                                ? std::log(rp.kernel(j, i)) + values[n - 1](i) / dd.eta
                                : kNegInf;
            k.row(j) = softmax_shifted(logits);
        }
        pol.kernels[n - 1] = k;
    }
    return pol;
}

void SoftMdp::validate() const {
    const Eigen::Index S = reward.rows(), A = reward.cols();
    if (S < 1 || A < 1) throw std::invalid_argument("soft mdp: empty tables");
    if (next.rows() != S || next.cols() != A || behavior.rows() != S || behavior.cols() != A)
        throw std::invalid_argument("soft mdp: table shape mismatch");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("soft mdp: need 0 <= gamma < 1");
    if (eta <= 0.0) throw std::invalid_argument("soft mdp: eta must be positive");
    if (next.minCoeff() < 0 || next.maxCoeff() >= S)
        throw std::invalid_argument("soft mdp: successor index out of range");
    if (behavior.minCoeff() < 0.0)
        throw std::invalid_argument("soft mdp: negative behavior probability");
    for (Eigen::Index s = 0; s < S; ++s)
        if (std::abs(behavior.row(s).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("soft mdp: behavior row does not sum to 1");
}

Eigen::MatrixXd soft_value_iteration(const SoftMdp& mdp, double tol, int max_sweeps) {
    mdp.validate();
    const Eigen::Index S = mdp.reward.rows(), A = mdp.reward.cols();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(S, A);
    Eigen::VectorXd soft_v(S);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (Eigen::Index s = 0; s < S; ++s)
            soft_v(s) = soft_blend(mdp.behavior.row(s), q.row(s), mdp.eta);
        Eigen::MatrixXd q_next(S, A);
        for (Eigen::Index s = 0; s < S; ++s)
            for (Eigen::Index a = 0; a < A; ++a)
                q_next(s, a) = mdp.reward(s, a) + mdp.gamma * soft_v(mdp.next(s, a));
        const double diff = (q_next - q).cwiseAbs().maxCoeff();
        q.swap(q_next);
        if (!q.allFinite()) throw NumericError("soft value iteration diverged");
        if (diff <= tol) return q;
    }
    throw NumericError("soft value iteration missed tolerance within the sweep budget");
}

int ToyMdpTables::state_index(const Eigen::Vector2d& s) const {
    const int cells = state_cells_per_dim;
    const double h = 2.0 / (cells - 1);
    const int ix = std::clamp(static_cast<int>(std::lround((s.x() + 1.0) / h)), 0, cells - 1);
    const int iy = std::clamp(static_cast<int>(std::lround((s.y() + 1.0) / h)), 0, cells - 1);
    return ix * cells + iy;
}

Eigen::Vector2d ToyMdpTables::action_point(int a) const {
    const int cells = action_cells_per_dim;
    return {action_axis(a / cells), action_axis(a % cells)};
}

ToyMdpTables discretize_toymdp(const ToyMdp& env, int state_cells, int action_cells, double kp,
                               double noise_std, double gamma, double eta) {
    if (state_cells < 2 || action_cells < 2)
        throw std::invalid_argument("discretize_toymdp: need >= 2 cells per dimension");
    if (noise_std <= 0.0)
        throw std::invalid_argument("discretize_toymdp: behavior noise must be positive");
    ToyMdpTables t;
    t.state_cells_per_dim = state_cells;
    t.action_cells_per_dim = action_cells;
    t.state_axis = Eigen::VectorXd::LinSpaced(state_cells, -1.0, 1.0);
    t.action_axis = Eigen::VectorXd::LinSpaced(action_cells, -1.0, 1.0);
    const int S = state_cells * state_cells, A = action_cells * action_cells;
    t.mdp.reward.resize(S, A);
    t.mdp.next.resize(S, A);
    t.mdp.behavior.resize(S, A);
    t.mdp.gamma = gamma;
    t.mdp.eta = eta;
    for (int s = 0; s < S; ++s) {
        const Eigen::Vector2d sp{t.state_axis(s / state_cells), t.state_axis(s % state_cells)};
        // Discrete surrogate of the collection controller: Gaussian around the
        // clamped proportional action, truncated to the grid.
        Eigen::Vector2d ctrl = (kp * (env.goal - sp)).cwiseMin(1.0).cwiseMax(-1.0);
        for (int a = 0; a < A; ++a) {
            const Eigen::Vector2d ap = t.action_point(a);
            t.mdp.behavior(s, a) =
                std::exp(-(ap - ctrl).squaredNorm() / (2.0 * noise_std * noise_std));
            const Eigen::Vector2d nxt =
                (sp + env.kappa * ap).cwiseMin(1.0).cwiseMax(-1.0);
            t.mdp.reward(s, a) = -(nxt - env.goal).norm();
            t.mdp.next(s, a) = t.state_index(nxt);
        }
        t.mdp.behavior.row(s) /= t.mdp.behavior.row(s).sum();
    }
    t.mdp.validate();
    return t;
}

double oracle_greedy_return(const ToyMdp& env, const ToyMdpTables& tables,
                            const Eigen::MatrixXd& q_table, int episodes, Rng& rng) {
    if (episodes < 1) throw std::invalid_argument("oracle_greedy_return: episodes >= 1");
    double total = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        Eigen::Vector2d s = env.reset(rng);
        for (int step = 0; step < env.horizon; ++step) {
            const int cell = tables.state_index(s);
            int best = 0;
            for (Eigen::Index a = 1; a < q_table.cols(); ++a)
                if (q_table(cell, a) > q_table(cell, best)) best = static_cast<int>(a);
            const auto [next, reward] = env.step(s, tables.action_point(best), rng);
            total += reward;
            s = next;
        }
    }
    return total / episodes;
}

double random_policy_return(const ToyMdp& env, int episodes, Rng& rng) {
    if (episodes < 1) throw std::invalid_argument("random_policy_return: episodes >= 1");
    double total = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        Eigen::Vector2d s = env.reset(rng);
        for (int step = 0; step < env.horizon; ++step) {
            const Eigen::Vector2d a{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            const auto [next, reward] = env.step(s, a, rng);
            total += reward;
            s = next;
        }
    }
    return total / episodes;
}

void GaussianPairSde::validate() const {
    if (v <= 0.0) throw std::invalid_argument("gaussian pair: variance must be positive");
    if (T <= 0.0) throw std::invalid_argument("gaussian pair: horizon must be positive");
    if (beta0 < 0.0 || beta1 < 0.0)
        throw std::invalid_argument("gaussian pair: beta must be nonnegative");
}

GirsanovKl girsanov_kl_analytic(const GaussianPairSde& pair) {
    pair.validate();
    const double dm = pair.m1 - pair.m2;
    // Shared initial variance makes both marginal scores affine with the same
    // slope, so the score mismatch is x-free and the path expectation drops.
    const auto integrand = [&](double t) {
        const double decay = std::exp(-pair.B(t));
        const double var = pair.v * decay + 1.0 - decay;
        return 0.5 * pair.beta(t) * dm * dm * decay / (var * var);
    };
    constexpr int kIntervals = 4096;  // composite Simpson, even count
    const double h = pair.T / kIntervals;
    double acc = integrand(0.0) + integrand(pair.T);
    for (int i = 1; i < kIntervals; ++i) acc += integrand(i * h) * (i % 2 ? 4.0 : 2.0);
    GirsanovKl out;
    out.integral = acc * h / 3.0;
    const double decay_T = std::exp(-pair.B(pair.T));
    const double var_T = pair.v * decay_T + 1.0 - decay_T;
    out.prior_mismatch = dm * dm * decay_T / (2.0 * var_T);
    out.total = out.integral + out.prior_mismatch;
    return out;
}

DiscretePathKl discrete_gaussian_path_kl(const GaussianPairSde& pair, int steps,
                                         bool schedule_variance) {
    pair.validate();
    if (steps < 1) throw std::invalid_argument("discrete path kl: steps >= 1");
    const double dm = pair.m1 - pair.m2, dt = pair.T / steps;
    DiscretePathKl out;
    out.steps = steps;
    out.chain.resize(steps);
    double abar_prev = 1.0, var_prev = pair.v;
    for (int n = 1; n <= steps; ++n) {
        GaussChainStep& st = out.chain[n - 1];
        st.beta = pair.beta(n * dt) * dt;
        if (st.beta >= 1.0)
            throw std::invalid_argument("discrete path kl: step count too small for this rate");
        const double alpha = 1.0 - st.beta;
        st.abar = abar_prev * alpha;
        const double var_n = pair.v * st.abar + 1.0 - st.abar;
        st.slope = std::sqrt(alpha) * var_prev / var_n;
        st.mean_coef = std::sqrt(abar_prev) - st.slope * std::sqrt(st.abar);
        st.var_rev = schedule_variance
                         ? (n == 1 ? st.beta : st.beta * (1.0 - abar_prev) / (1.0 - st.abar))
                         : var_prev * st.beta / var_n;
        st.step_kl = dm * dm * st.mean_coef * st.mean_coef / (2.0 * st.var_rev);
        out.step_sum += st.step_kl;
        abar_prev = st.abar;
        var_prev = var_n;
    }
    out.terminal = dm * dm * abar_prev / (2.0 * var_prev);
    out.total = out.step_sum + out.terminal;
    return out;
}

std::vector<DiscretePathKl> discrete_vs_continuous_kl(const GaussianPairSde& pair,
                                                      const std::vector<int>& step_counts) {
    std::vector<DiscretePathKl> out;
    out.reserve(step_counts.size());
    for (int n : step_counts) {
        if (n < 2) throw std::invalid_argument("discrete vs continuous: step counts >= 2");
        out.push_back(discrete_gaussian_path_kl(pair, n, /*schedule_variance=*/true));
    }
    return out;
}

namespace {

// Exact W1 between 1-D empirical distributions of possibly different sizes:
// integrate |F_a^{-1} - F_b^{-1}| over the merged quantile breakpoints.
double wasserstein1(Eigen::VectorXd a, Eigen::VectorXd b) {
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    const Eigen::Index na = a.size(), nb = b.size();
    Eigen::Index i = 0, j = 0;
    double u_prev = 0.0, acc = 0.0;
    while (i < na && j < nb) {
        const double ua = static_cast<double>(i + 1) / na;
        const double ub = static_cast<double>(j + 1) / nb;
        const double u = std::min(ua, ub);
        acc += (u - u_prev) * std::abs(a(i) - b(j));
        u_prev = u;
        if (ua <= u + 1e-18) ++i;
        if (ub <= u + 1e-18) ++j;
    }
    return acc;
}

}  // namespace

double sliced_wasserstein(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int projections,
                          std::uint64_t seed) {
    if (a.cols() == 0 || b.cols() == 0)
        throw std::invalid_argument("sliced wasserstein: empty point set");
    if (a.rows() != b.rows())
        throw std::invalid_argument("sliced wasserstein: dimension mismatch");
    if (projections < 1) throw std::invalid_argument("sliced wasserstein: projections >= 1");
    Rng rng(seed);
    const Eigen::Index d = a.rows();
    double acc = 0.0;
    for (int p = 0; p < projections; ++p) {
        Eigen::VectorXd u(d);
        double norm = 0.0;
        do {
            for (Eigen::Index k = 0; k < d; ++k) u(k) = rng.normal();
            norm = u.norm();
        } while (norm < 1e-12);
        u /= norm;
        acc += wasserstein1(a.transpose() * u, b.transpose() * u);
    }
    return acc / projections;
}

}  // namespace bdpo
