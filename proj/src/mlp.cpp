// SPDX-License-Identifier: Apache-2.0
#include "bdpo/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bdpo/errors.hpp"

namespace bdpo {

namespace {

Eigen::Index layer_offset(const std::vector<int>& widths, int layer) {
    Eigen::Index off = 0;
    for (int l = 0; l < layer; ++l)
        off += static_cast<Eigen::Index>(widths[l + 1]) * widths[l] + widths[l + 1];
    return off;
}

Eigen::Index total_params(const std::vector<int>& widths) {
    return layer_offset(widths, static_cast<int>(widths.size()) - 1);
}

inline void silu_inplace(Eigen::MatrixXd& z) {
    z = z.array() / (1.0 + (-z.array()).exp());
}

// d/dz silu(z) = s(z) * (1 + z * (1 - s(z))) with s the logistic function.
inline Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& z) {
    Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
    return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

void check_input(const Mlp& net, const Eigen::MatrixXd& x, const char* op) {
    if (x.rows() != net.input_dim())
        throw std::invalid_argument(std::string(op) + ": input has " + std::to_string(x.rows()) +
                                    " rows, network expects " + std::to_string(net.input_dim()));
}

}  // namespace

Mlp Mlp::make(std::vector<int> widths, Rng& rng) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp::make: need at least two widths");
    for (int w : widths)
        if (w < 0 || (w == 0 && &w != &widths.front()))
            throw std::invalid_argument("Mlp::make: non-input widths must be positive");
    Mlp net;
    net.widths = std::move(widths);
    net.params.resize(total_params(net.widths));
    for (int l = 0; l < net.layers(); ++l) {
        const double bound = 1.0 / std::sqrt(std::max(1, net.widths[l]));
        auto w = net.weight(l);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
        auto b = net.bias(l);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-bound, bound);
    }
    return net;
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
    return {params.data() + layer_offset(widths, layer), widths[layer + 1], widths[layer]};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
    return {params.data() + layer_offset(widths, layer), widths[layer + 1], widths[layer]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
    return {params.data() + layer_offset(widths, layer) +
                static_cast<Eigen::Index>(widths[layer + 1]) * widths[layer],
            widths[layer + 1]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
    return {params.data() + layer_offset(widths, layer) +
                static_cast<Eigen::Index>(widths[layer + 1]) * widths[layer],
            widths[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
    check_input(*this, x, "mlp_forward");
    Eigen::MatrixXd h = x;
    for (int l = 0; l < layers(); ++l) {
        Eigen::MatrixXd z = (weight(l) * h).colwise() + bias(l);
        if (l + 1 < layers()) silu_inplace(z);
        h = std::move(z);
    }
    return h;
}

Eigen::VectorXd Mlp::forward1(const Eigen::VectorXd& x) const { return forward(x); }

Eigen::MatrixXd mlp_forward_trace(const Mlp& net, const Eigen::MatrixXd& x, MlpTrace& trace) {
    check_input(net, x, "mlp_forward");
    trace.input = x;
    trace.pre.assign(net.layers(), {});
    trace.post.assign(net.layers() - 1, {});
    const Eigen::MatrixXd* h = &trace.input;
    for (int l = 0; l < net.layers(); ++l) {
        trace.pre[l] = (net.weight(l) * (*h)).colwise() + net.bias(l);
        if (l + 1 < net.layers()) {
            trace.post[l] = trace.pre[l];
            silu_inplace(trace.post[l]);
            h = &trace.post[l];
        }
    }
    return trace.pre.back();
}

void mlp_backward(const Mlp& net, const MlpTrace& trace, const Eigen::MatrixXd& upstream,
                  Eigen::VectorXd& grad, Eigen::MatrixXd* input_grad) {
    if (upstream.rows() != net.output_dim() || upstream.cols() != trace.input.cols())
        throw std::invalid_argument("mlp_backward: upstream is " + std::to_string(upstream.rows()) +
                                    "x" + std::to_string(upstream.cols()) + ", expected " +
                                    std::to_string(net.output_dim()) + "x" +
                                    std::to_string(trace.input.cols()));
    if (!upstream.allFinite()) throw NumericError("mlp_backward: non-finite upstream gradient");
    grad.resize(net.param_count());
    Eigen::MatrixXd delta = upstream;  // dL/d(pre-activation of current layer)
    for (int l = net.layers() - 1; l >= 0; --l) {
        const Eigen::MatrixXd& below = (l == 0) ? trace.input : trace.post[l - 1];
        const Eigen::Index off = layer_offset(net.widths, l);
        const Eigen::Index wlen = static_cast<Eigen::Index>(net.widths[l + 1]) * net.widths[l];
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + off, net.widths[l + 1], net.widths[l]);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + wlen, net.widths[l + 1]);
        gw.noalias() = delta * below.transpose();
        gb = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd next = net.weight(l).transpose() * delta;
            delta = next.cwiseProduct(silu_grad(trace.pre[l - 1]));
        } else if (input_grad) {
            input_grad->noalias() = net.weight(0).transpose() * delta;
        }
    }
}

Eigen::VectorXd timestep_embedding(int n, int dim) {
    if (dim <= 0 || dim % 2 != 0)
        throw std::invalid_argument("timestep_embedding: dim must be positive and even");
    Eigen::VectorXd e(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
        e(2 * i) = std::sin(n * freq);
        e(2 * i + 1) = std::cos(n * freq);
    }
    return e;
}

}  // namespace bdpo
