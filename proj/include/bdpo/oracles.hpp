// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bdpo/rng.hpp"
#include "bdpo/toymdp.hpp"

namespace bdpo {

// Finite-alphabet diffusion chain used as exact ground truth. forward[n-1]
// holds q_{n|n-1} with rows indexed by the source point, so rows are
// stochastic. reward plays the role of the terminal payoff Q(a) on the grid.
struct DiscreteDiffusion {
    Eigen::VectorXd grid;                  // point locations, size S
    Eigen::VectorXd nu0;                   // base marginal, sums to 1
    std::vector<Eigen::MatrixXd> forward;  // N matrices, S x S, row-stochastic
    Eigen::VectorXd reward;                // terminal payoff over the grid
    double eta = 1.0;

    int states() const { return static_cast<int>(nu0.size()); }
    int steps() const { return static_cast<int>(forward.size()); }
    void validate() const;

    // Marginals nu_0..nu_N under the forward chain.
    std::vector<Eigen::VectorXd> marginals() const;
};

DiscreteDiffusion random_discrete_instance(int states, int steps, double eta, Rng& rng);

// Bayes inversion of forward step n (1-based). kernel(j, i) = q_{n-1|n}(i|j);
// rows with zero conditioning mass are flagged undefined and left uniform so
// downstream products stay finite.
struct ReversePosterior {
    Eigen::MatrixXd kernel;
    std::vector<bool> defined;
};
ReversePosterior discrete_reverse_posterior(const DiscreteDiffusion& dd, int n);

// Optimal diffusion values: V_0 = reward, V_n = eta log E_rev[exp(V_{n-1}/eta)].
// Ill-defined conditioning states carry -inf (they have no mass to contribute).
std::vector<Eigen::VectorXd> recursion_optimal_values(const DiscreteDiffusion& dd);

// Target marginal prop. to nu0 * exp(reward / eta).
Eigen::VectorXd boltzmann_tilted_marginal(const DiscreteDiffusion& dd);

// Composes the optimal reverse chain p*_{n-1|n} built from the recursion,
// starting at the tilted chain's exact terminal marginal (prop. to
// nu_N * exp(V_N / eta)), and returns the sup distance between the composed
// step-0 marginal and the Boltzmann-tilted target.
double tilted_marginal_check(const DiscreteDiffusion& dd);

// Reverse-chain policy over the same alphabet: kernels[n-1](j, i) is
// p_{n-1|n}(i | j). The behavior policy is the exact Bayes reversal.
struct DiscretePolicy {
    std::vector<Eigen::MatrixXd> kernels;
};
DiscretePolicy discrete_behavior_policy(const DiscreteDiffusion& dd);
DiscretePolicy random_discrete_policy(const DiscreteDiffusion& dd, Rng& rng);

// Exact policy evaluation of the KL-regularized diffusion MDP:
// V_0 = reward, V_n(j) = sum_i p(i|j) (V_{n-1}(i) - eta log(p(i|j)/q_rev(i|j))).
std::vector<Eigen::VectorXd> discrete_policy_values(const DiscreteDiffusion& dd,
                                                    const DiscretePolicy& pol);

// One exact soft improvement sweep: p'(.|j) prop. to q_rev(.|j) exp(V_{n-1}/eta).
DiscretePolicy discrete_policy_improve(const DiscreteDiffusion& dd,
                                       const std::vector<Eigen::VectorXd>& values);

// Tabular KL-regularized control problem with deterministic transitions.
// next(s, a) indexes the successor state; behavior(s, a) = nu(a|s).
struct SoftMdp {
    Eigen::MatrixXd reward;                // S x A
    Eigen::MatrixXi next;                  // S x A
    Eigen::MatrixXd behavior;              // S x A, rows sum to 1
    double gamma = 0.99;
    double eta = 0.2;

    void validate() const;
};

// Fixed point of Q = R + gamma eta log E_{a' ~ nu}[exp(Q(s', a')/eta)] to
// sup-norm tolerance; gamma-contraction makes the sweep count predictable.
Eigen::MatrixXd soft_value_iteration(const SoftMdp& mdp, double tol = 1e-9,
                                     int max_sweeps = 20000);

// Point-mass control discretized onto regular state/action grids. Behavior
// probabilities follow the proportional controller with Gaussian exploration,
// truncated to the action grid.
struct ToyMdpTables {
    SoftMdp mdp;
    Eigen::VectorXd state_axis;   // per-dimension cell centers
    Eigen::VectorXd action_axis;
    int state_cells_per_dim = 0;
    int action_cells_per_dim = 0;

    int state_index(const Eigen::Vector2d& s) const;
    Eigen::Vector2d action_point(int a) const;
};
ToyMdpTables discretize_toymdp(const ToyMdp& env, int state_cells, int action_cells, double kp,
                               double noise_std, double gamma, double eta);

// Mean undiscounted return of the greedy-on-Q* grid policy rolled in the
// continuous environment (states snap to the nearest cell).
double oracle_greedy_return(const ToyMdp& env, const ToyMdpTables& tables,
                            const Eigen::MatrixXd& q_table, int episodes, Rng& rng);
// Baseline: actions drawn uniformly from the action box.
double random_policy_return(const ToyMdp& env, int episodes, Rng& rng);

// Two one-dimensional Gaussians pushed through the same VP flow on [0, T].
// beta(t) ramps linearly from beta0 to beta1; v is the shared initial
// variance. The drift is the standard VP form -beta(t) x / 2.
struct GaussianPairSde {
    double m1 = 0.0;
    double m2 = 1.0;
    double v = 1.0;
    double beta0 = 0.1;
    double beta1 = 0.1;
    double T = 10.0;

    double beta(double t) const { return beta0 + (beta1 - beta0) * t / T; }
    double B(double t) const { return beta0 * t + (beta1 - beta0) * t * t / (2.0 * T); }
    void validate() const;
};

// Path-measure divergence between the two reverse SDEs. `integral` is the
// accumulated score-mismatch term; `prior_mismatch` is the divergence of the
// time-T marginals the reverse processes start from; `total` is their sum,
// the full path KL.
struct GirsanovKl {
    double integral = 0.0;
    double prior_mismatch = 0.0;
    double total = 0.0;
};
GirsanovKl girsanov_kl_analytic(const GaussianPairSde& pair);

// Discrete reverse chains for both Gaussians at a given step count: shared
// posterior slope and variance, analytically known intercepts.
// beta_n = beta(n T / N) * T / N.
//
// Two variance conventions for the shared reverse kernel:
//  - exact (default): the true marginal posterior variance, which makes the
//    chain the exact time reversal, so total == (m1-m2)^2/(2 v) at every N.
//  - schedule_variance: the generative convention sigma_1^2 = beta_1,
//    sigma_n^2 = beta_n (1-abar_{n-1})/(1-abar_n). This is what the sampler
//    actually uses, and its path divergence only reaches the continuous-time
//    value in the N -> infinity limit.
struct GaussChainStep {
    double beta = 0.0;       // discrete beta_n
    double abar = 0.0;       // cumulative product at n
    double mean_coef = 0.0;  // posterior mean = A x + m_i * mean_coef
    double slope = 0.0;      // A
    double var_rev = 0.0;    // shared posterior variance
    double step_kl = 0.0;    // KL between the two reverse kernels at n
};
struct DiscretePathKl {
    int steps = 0;
    std::vector<GaussChainStep> chain;  // indexed n-1
    double step_sum = 0.0;              // sum of per-step KLs
    double terminal = 0.0;              // KL of the step-N marginals
    double total = 0.0;                 // step_sum + terminal
};
DiscretePathKl discrete_gaussian_path_kl(const GaussianPairSde& pair, int steps,
                                         bool schedule_variance = false);
// Sampler-convention path divergences at each step count, for comparison
// against girsanov_kl_analytic.
std::vector<DiscretePathKl> discrete_vs_continuous_kl(const GaussianPairSde& pair,
                                                      const std::vector<int>& step_counts);

// Average over random unit projections of the exact 1-D Wasserstein-1
// distance between the projected empirical distributions. Columns are points.
double sliced_wasserstein(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int projections,
                          std::uint64_t seed);

}  // namespace bdpo
