#pragma once

#include <span>
#include <string>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/layers.hpp"
#include "intent/numcore/lstm.hpp"
#include "intent/numcore/matrix.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

enum class SequenceMode { Windowed, FullSequence };

inline constexpr std::string_view to_string(SequenceMode m) {
    return m == SequenceMode::Windowed ? "windowed" : "full-sequence";
}

struct LstmConfig {
    std::size_t input_width = 0;
    std::size_t hidden_layers = 2;
    std::size_t hidden_size = 50;
    std::size_t output = 2;
    double l2 = 0.01;
    double lr = 0.001;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::size_t window_len = 5;
    SequenceMode mode = SequenceMode::Windowed;
    std::uint64_t seed = 0;
};

// Stacked LSTM with ReLU between layers and a dense head reading the top
// hidden state.
struct LstmNetwork {
    std::vector<LstmCell> cells;
    DenseLayer head;

    LstmNetwork() = default;
    LstmNetwork(std::size_t in, std::size_t layers, std::size_t hidden, std::size_t out) : head(hidden, out) {
        if (layers == 0 || hidden == 0 || in == 0 || out == 0) {
            throw Error(ErrorCode::InvalidConfig, "lstm widths and layer count must be positive");
        }
        std::size_t prev = in;
        for (std::size_t l = 0; l < layers; ++l) {
            cells.emplace_back(prev, hidden);
            prev = hidden;
        }
    }

    std::size_t input_width() const { return cells.front().input_width; }
    std::size_t hidden() const { return cells.front().hidden; }

    void init(Rng& rng) {
        for (auto& c : cells) c.init(rng);
        head.init(rng);
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (std::size_t l = 0; l < cells.size(); ++l) {
            auto p = cells[l].params("lstm" + std::to_string(l));
            out.insert(out.end(), p.begin(), p.end());
        }
        auto h = head.params("head");
        out.insert(out.end(), h.begin(), h.end());
        return out;
    }

    // Top-layer hidden state at every step of `seq` (T x F).
    std::vector<Vector> top_states(const Matrix& seq) const {
        check_width(seq);
        const std::size_t H = hidden();
        std::vector<LstmState> state(cells.size(), LstmState{Vector(H, 0.0), Vector(H, 0.0)});
        std::vector<Vector> tops;
        tops.reserve(seq.rows);
        for (std::size_t t = 0; t < seq.rows; ++t) {
            Vector in(seq.row(t).begin(), seq.row(t).end());
            for (std::size_t l = 0; l < cells.size(); ++l) {
                state[l] = lstm_cell_step(cells[l], in, state[l].h, state[l].c);
                in = l + 1 < cells.size() ? relu(state[l].h) : state[l].h;
            }
            tops.push_back(std::move(in));
        }
        return tops;
    }

    Vector final_logits(const Matrix& seq) const {
        if (seq.rows == 0) throw Error(ErrorCode::SequenceTooShort, "empty sequence");
        return dense_forward(head, top_states(seq).back());
    }

    std::vector<Vector> step_logits(const Matrix& seq) const {
        std::vector<Vector> out;
        for (const auto& h : top_states(seq)) out.push_back(dense_forward(head, h));
        return out;
    }

    // Forward + BPTT over one sequence. With `final_only` the loss is taken at
    // the last step against targets[0]; otherwise at every step t with
    // mask[t] != 0 against targets[t]. Gradients are accumulated scaled by
    // `scale`; the returned loss is the unscaled sum over scored steps.
    double accumulate(const Matrix& seq, std::span<const int> targets, std::span<const unsigned char> mask,
                      bool final_only, double scale) {
        check_width(seq);
        const std::size_t T = seq.rows;
        const std::size_t L = cells.size();
        const std::size_t H = hidden();
        if (T == 0) throw Error(ErrorCode::SequenceTooShort, "empty sequence");

        std::vector<std::vector<LstmStepCache>> caches(L, std::vector<LstmStepCache>(T));
        std::vector<std::vector<Vector>> hs(L, std::vector<Vector>(T));  // raw h per layer/step
        std::vector<LstmState> state(L, LstmState{Vector(H, 0.0), Vector(H, 0.0)});
        for (std::size_t t = 0; t < T; ++t) {
            Vector in(seq.row(t).begin(), seq.row(t).end());
            for (std::size_t l = 0; l < L; ++l) {
                state[l] = lstm_cell_step(cells[l], in, state[l].h, state[l].c, &caches[l][t]);
                hs[l][t] = state[l].h;
                if (l + 1 < L) in = relu(state[l].h);
            }
        }

        double loss = 0.0;
        std::vector<Vector> dh_above(T, Vector(H, 0.0));
        auto score = [&](std::size_t t, int target) {
            const Vector logits = dense_forward(head, hs[L - 1][t]);
            LossGrad lg = softmax_cross_entropy(logits, static_cast<std::size_t>(target));
            loss += lg.loss;
            for (double& v : lg.grad) v *= scale;
            const Vector dh = dense_backward(head, hs[L - 1][t], lg.grad);
            for (std::size_t j = 0; j < H; ++j) dh_above[t][j] += dh[j];
        };
        if (final_only) {
            score(T - 1, targets[0]);
        } else {
            for (std::size_t t = 0; t < T; ++t) {
                if (mask[t]) score(t, targets[t]);
            }
        }

        for (std::size_t l = L; l-- > 0;) {
            Vector dh_next(H, 0.0);
            Vector dc_next(H, 0.0);
            std::vector<Vector> dh_below(T);
            for (std::size_t t = T; t-- > 0;) {
                Vector dh(H);
                for (std::size_t j = 0; j < H; ++j) dh[j] = dh_above[t][j] + dh_next[j];
                LstmStepGrad g = lstm_cell_backward(cells[l], caches[l][t], dh, dc_next);
                dh_next = std::move(g.dh_prev);
                dc_next = std::move(g.dc_prev);
                if (l > 0) dh_below[t] = relu_backward(hs[l - 1][t], g.dx);
            }
            if (l > 0) dh_above = std::move(dh_below);
        }
        return loss;
    }

private:
    void check_width(const Matrix& seq) const {
        if (seq.cols != input_width()) {
            throw Error(ErrorCode::ShapeMismatch, "lstm input width " + std::to_string(seq.cols) + ", expected " +
                                                      std::to_string(input_width()));
        }
    }
};

}  // namespace intent
