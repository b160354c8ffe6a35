// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bdpo/rng.hpp"

namespace bdpo {

// Dense network with SiLU hidden layers and a linear output layer.
// Parameters live in one flat vector: [W0, b0, W1, b1, ...], each W stored
// column-major with shape (fan_out, fan_in). Batches are matrix columns.
struct Mlp {
    std::vector<int> widths;  // [input, hidden..., output]
    Eigen::VectorXd params;

    // Weights uniform in +-1/sqrt(fan_in), biases likewise. Draw order is
    // fixed (layer by layer, W column-major then bias) for reproducibility.
    static Mlp make(std::vector<int> widths, Rng& rng);

    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
    Eigen::Index param_count() const { return params.size(); }

    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd forward1(const Eigen::VectorXd& x) const;
};

// Activations captured during a forward pass, consumed by mlp_backward.
struct MlpTrace {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
    std::vector<Eigen::MatrixXd> post;  // post-activation per hidden layer
};

Eigen::MatrixXd mlp_forward_trace(const Mlp& net, const Eigen::MatrixXd& x, MlpTrace& trace);

// Reverse-mode gradients for upstream dL/dy. Writes parameter gradients into
// `grad` (same layout as params, overwritten) and optionally dL/dx.
void mlp_backward(const Mlp& net, const MlpTrace& trace, const Eigen::MatrixXd& upstream,
                  Eigen::VectorXd& grad, Eigen::MatrixXd* input_grad = nullptr);

// Sinusoidal embedding of an integer step index; dim must be even.
Eigen::VectorXd timestep_embedding(int n, int dim);

inline constexpr int kTimeEmbedDim = 16;

}  // namespace bdpo
