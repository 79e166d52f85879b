#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/matrix.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

// A trainable tensor seen by the optimizer and the gradient checker.
// `decay` marks weights that receive L2 regularization (biases do not).
struct ParamRef {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
    bool decay = true;
};

inline void zero_grads(std::span<const ParamRef> params) {
    for (const auto& p : params) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

inline std::size_t parameter_count(std::span<const ParamRef> params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.value.size();
    return n;
}

// Glorot uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
inline void glorot_uniform(std::span<double> w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-a, a);
}

// y = W x + b, W is out x in.
struct DenseLayer {
    Matrix weight;
    Vector bias;
    Matrix weight_grad;
    Vector bias_grad;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out)
        : weight(out, in), bias(out, 0.0), weight_grad(out, in), bias_grad(out, 0.0) {}

    std::size_t in_width() const { return weight.cols; }
    std::size_t out_width() const { return weight.rows; }

    void init(Rng& rng) {
        glorot_uniform(weight.data, in_width(), out_width(), rng);
        std::fill(bias.begin(), bias.end(), 0.0);
    }

    std::vector<ParamRef> params(std::string_view prefix) {
        return {{std::string(prefix) + ".weight", weight.data, weight_grad.data, true},
                {std::string(prefix) + ".bias", bias, bias_grad, false}};
    }
};

inline void dense_forward_into(const DenseLayer& layer, std::span<const double> x, std::span<double> y) {
    if (x.size() != layer.in_width()) {
        throw Error(ErrorCode::ShapeMismatch, "dense input width " + std::to_string(x.size()) + ", expected " +
                                                  std::to_string(layer.in_width()));
    }
    const std::size_t in = layer.in_width();
    for (std::size_t r = 0; r < layer.out_width(); ++r) {
        const double* w = layer.weight.data.data() + r * in;
        double s = layer.bias[r];
        for (std::size_t c = 0; c < in; ++c) s += w[c] * x[c];
        y[r] = s;
    }
}

inline Vector dense_forward(const DenseLayer& layer, std::span<const double> x) {
    Vector y(layer.out_width());
    dense_forward_into(layer, x, y);
    return y;
}

// Accumulates dW += dy x^T, db += dy and returns dx = W^T dy.
inline Vector dense_backward(DenseLayer& layer, std::span<const double> x, std::span<const double> dy) {
    const std::size_t in = layer.in_width();
    Vector dx(in, 0.0);
    for (std::size_t r = 0; r < layer.out_width(); ++r) {
        const double g = dy[r];
        layer.bias_grad[r] += g;
        if (g == 0.0) continue;
        double* gw = layer.weight_grad.data.data() + r * in;
        const double* w = layer.weight.data.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) {
            gw[c] += g * x[c];
            dx[c] += g * w[c];
        }
    }
    return dx;
}

inline Vector relu(std::span<const double> x) {
    Vector y(x.begin(), x.end());
    for (double& v : y) v = v > 0.0 ? v : 0.0;
    return y;
}

// Gradient through relu given the pre-activation input.
inline Vector relu_backward(std::span<const double> pre, std::span<const double> dy) {
    Vector dx(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Max-subtracted softmax.
inline Vector softmax(std::span<const double> logits) {
    Vector p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double m = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& v : p) {
        v = std::exp(v - m);
        z += v;
    }
    for (double& v : p) v /= z;
    return p;
}

struct LossGrad {
    double loss = 0.0;
    Vector grad;  // d loss / d logits
};

inline LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t target) {
    if (target >= logits.size()) {
        throw Error(ErrorCode::BadTarget, "target " + std::to_string(target) + " outside " +
                                              std::to_string(logits.size()) + " classes");
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double log_z = std::log(z) + m;
    LossGrad out;
    out.loss = log_z - logits[target];
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - log_z);
    out.grad[target] -= 1.0;
    return out;
}

inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace intent
