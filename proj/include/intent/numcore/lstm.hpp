#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/layers.hpp"
#include "intent/numcore/matrix.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

// LSTM cell with the four gates stacked row-wise in the order
// input, forget, output, candidate. Each gate reads z = [x; h].
struct LstmCell {
    std::size_t input_width = 0;
    std::size_t hidden = 0;
    Matrix weight;  // 4H x (X + H)
    Vector bias;    // 4H
    Matrix weight_grad;
    Vector bias_grad;

    LstmCell() = default;
    LstmCell(std::size_t x_width, std::size_t h)
        : input_width(x_width),
          hidden(h),
          weight(4 * h, x_width + h),
          bias(4 * h, 0.0),
          weight_grad(4 * h, x_width + h),
          bias_grad(4 * h, 0.0) {}

    // Glorot per gate block; forget bias 1.
    void init(Rng& rng) {
        const std::size_t block = hidden * weight.cols;
        for (std::size_t g = 0; g < 4; ++g) {
            glorot_uniform(std::span<double>(weight.data).subspan(g * block, block), weight.cols, hidden, rng);
        }
        std::fill(bias.begin(), bias.end(), 0.0);
        std::fill(bias.begin() + static_cast<std::ptrdiff_t>(hidden), bias.begin() + static_cast<std::ptrdiff_t>(2 * hidden), 1.0);
    }

    std::vector<ParamRef> params(std::string_view prefix) {
        return {{std::string(prefix) + ".weight", weight.data, weight_grad.data, true},
                {std::string(prefix) + ".bias", bias, bias_grad, false}};
    }
};

struct LstmState {
    Vector h;
    Vector c;
};

// Everything the backward pass needs from one forward step.
struct LstmStepCache {
    Vector z;  // [x; h_prev]
    Vector i, f, o, g;
    Vector c_prev;
    Vector tanh_c;
};

inline LstmState lstm_cell_step(const LstmCell& cell, std::span<const double> x, std::span<const double> h,
                                std::span<const double> c, LstmStepCache* cache = nullptr) {
    const std::size_t H = cell.hidden;
    if (x.size() != cell.input_width || h.size() != H || c.size() != H) {
        throw Error(ErrorCode::ShapeMismatch, "lstm step: widths x=" + std::to_string(x.size()) + " h=" +
                                                  std::to_string(h.size()) + " c=" + std::to_string(c.size()) +
                                                  " do not match cell (" + std::to_string(cell.input_width) + ", " +
                                                  std::to_string(H) + ")");
    }
    const std::size_t zw = cell.weight.cols;
    Vector z(zw);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(h.begin(), h.end(), z.begin() + static_cast<std::ptrdiff_t>(x.size()));

    Vector pre(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        const double* w = cell.weight.data.data() + r * zw;
        double s = cell.bias[r];
        for (std::size_t k = 0; k < zw; ++k) s += w[k] * z[k];
        pre[r] = s;
    }

    LstmState next{Vector(H), Vector(H)};
    Vector gi(H), gf(H), go(H), gg(H), tc(H);
    for (std::size_t j = 0; j < H; ++j) {
        gi[j] = sigmoid(pre[j]);
        gf[j] = sigmoid(pre[H + j]);
        go[j] = sigmoid(pre[2 * H + j]);
        gg[j] = std::tanh(pre[3 * H + j]);
        next.c[j] = gf[j] * c[j] + gi[j] * gg[j];
        tc[j] = std::tanh(next.c[j]);
        next.h[j] = go[j] * tc[j];
    }
    if (cache != nullptr) {
        cache->z = std::move(z);
        cache->i = std::move(gi);
        cache->f = std::move(gf);
        cache->o = std::move(go);
        cache->g = std::move(gg);
        cache->c_prev.assign(c.begin(), c.end());
        cache->tanh_c = std::move(tc);
    }
    return next;
}

struct LstmStepGrad {
    Vector dx;
    Vector dh_prev;
    Vector dc_prev;
};

// Backward through one step. `dh` is the total gradient reaching h_t and
// `dc` the gradient reaching c_t from step t+1. Accumulates into the cell's
// gradient buffers.
inline LstmStepGrad lstm_cell_backward(LstmCell& cell, const LstmStepCache& cache, std::span<const double> dh,
                                       std::span<const double> dc) {
    const std::size_t H = cell.hidden;
    const std::size_t zw = cell.weight.cols;
    Vector dpre(4 * H);
    LstmStepGrad out;
    out.dc_prev.resize(H);
    for (std::size_t j = 0; j < H; ++j) {
        const double dct = dc[j] + dh[j] * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
        const double d_o = dh[j] * cache.tanh_c[j];
        const double d_i = dct * cache.g[j];
        const double d_g = dct * cache.i[j];
        const double d_f = dct * cache.c_prev[j];
        out.dc_prev[j] = dct * cache.f[j];
        dpre[j] = d_i * cache.i[j] * (1.0 - cache.i[j]);
        dpre[H + j] = d_f * cache.f[j] * (1.0 - cache.f[j]);
        dpre[2 * H + j] = d_o * cache.o[j] * (1.0 - cache.o[j]);
        dpre[3 * H + j] = d_g * (1.0 - cache.g[j] * cache.g[j]);
    }
    Vector dz(zw, 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        const double g = dpre[r];
        cell.bias_grad[r] += g;
        if (g == 0.0) continue;
        double* gw = cell.weight_grad.data.data() + r * zw;
        const double* w = cell.weight.data.data() + r * zw;
        for (std::size_t k = 0; k < zw; ++k) {
            gw[k] += g * cache.z[k];
            dz[k] += g * w[k];
        }
    }
    out.dx.assign(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(cell.input_width));
    out.dh_prev.assign(dz.begin() + static_cast<std::ptrdiff_t>(cell.input_width), dz.end());
    return out;
}

}  // namespace intent
