#pragma once

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/layers.hpp"
#include "intent/numcore/matrix.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

struct MlpConfig {
    std::size_t input_width = 0;
    std::vector<std::size_t> hidden{64, 32};
    std::size_t output = 4;
    double lr = 0.001;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double l2 = 0.0;
    std::uint64_t seed = 0;
};

// Fully connected network with ReLU on every hidden layer and raw logits out.
struct MlpNetwork {
    std::vector<DenseLayer> layers;

    MlpNetwork() = default;
    MlpNetwork(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
        std::size_t prev = in;
        for (std::size_t h : hidden) {
            layers.emplace_back(prev, h);
            prev = h;
        }
        layers.emplace_back(prev, out);
    }

    std::size_t input_width() const { return layers.front().in_width(); }
    std::size_t output_width() const { return layers.back().out_width(); }

    void init(Rng& rng) {
        for (auto& l : layers) l.init(rng);
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            auto p = layers[i].params("dense" + std::to_string(i));
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }

    Vector logits(std::span<const double> x) const {
        if (x.size() != input_width()) {
            throw Error(ErrorCode::ShapeMismatch, "mlp input width " + std::to_string(x.size()) + ", expected " +
                                                      std::to_string(input_width()));
        }
        Vector a(x.begin(), x.end());
        for (std::size_t i = 0; i < layers.size(); ++i) {
            a = dense_forward(layers[i], a);
            if (i + 1 < layers.size()) a = relu(a);
        }
        return a;
    }

    // Forward + backward for one sample; gradients are accumulated scaled by
    // `scale`. Returns the unscaled cross-entropy loss.
    double accumulate(std::span<const double> x, std::size_t target, double scale) {
        if (x.size() != input_width()) {
            throw Error(ErrorCode::ShapeMismatch, "mlp input width " + std::to_string(x.size()) + ", expected " +
                                                      std::to_string(input_width()));
        }
        std::vector<Vector> inputs;  // input to each layer
        std::vector<Vector> pre;     // pre-activation of each hidden layer
        inputs.emplace_back(x.begin(), x.end());
        for (std::size_t i = 0; i < layers.size(); ++i) {
            Vector z = dense_forward(layers[i], inputs.back());
            if (i + 1 < layers.size()) {
                inputs.push_back(relu(z));
                pre.push_back(std::move(z));
            } else {
                inputs.push_back(std::move(z));
            }
        }
        LossGrad lg = softmax_cross_entropy(inputs.back(), target);
        Vector d = std::move(lg.grad);
        for (double& v : d) v *= scale;
        for (std::size_t i = layers.size(); i-- > 0;) {
            Vector dx = dense_backward(layers[i], inputs[i], d);
            if (i > 0) d = relu_backward(pre[i - 1], dx);
        }
        return lg.loss;
    }
};

}  // namespace intent
