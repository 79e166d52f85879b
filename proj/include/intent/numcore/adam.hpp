#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/layers.hpp"

namespace intent {

struct AdamHyper {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    std::vector<Vector> m;
    std::vector<Vector> v;
    std::uint64_t t = 0;
};

// One bias-corrected Adam update. L2 enters the gradient as g + l2 * theta
// for parameters flagged `decay`. Moment buffers are created on first use.
inline void adam_step(AdamState& state, std::span<const ParamRef> params, double l2) {
    if (l2 < 0.0) throw Error(ErrorCode::InvalidConfig, "l2 must be non-negative");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.value.size(), 0.0);
            state.v.emplace_back(p.value.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "adam: parameter count changed");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].value.size() != state.m[k].size() || params[k].grad.size() != params[k].value.size()) {
            throw Error(ErrorCode::ShapeMismatch, "adam: shape of " + params[k].name + " changed");
        }
    }
    ++state.t;
    const auto& hp = state.hyper;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        const double decay = p.decay ? l2 : 0.0;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i] + decay * p.value[i];
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p.value[i] -= hp.lr * mh / (std::sqrt(vh) + hp.eps);
        }
    }
}

}  // namespace intent
