#pragma once

// Trained-model wrapper, the two predictors' training loops, baseline
// dispatch and (de)serialization through the numcore container.

#include <algorithm>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "intent/error.hpp"
#include "intent/features.hpp"
#include "intent/models/baselines.hpp"
#include "intent/models/lstm_net.hpp"
#include "intent/models/mlp.hpp"
#include "intent/numcore/adam.hpp"
#include "intent/numcore/layers.hpp"
#include "intent/numcore/serialize.hpp"

namespace intent {

struct MlpModel {
    MlpConfig config;
    MlpNetwork net;
};

struct LstmModel {
    LstmConfig config;
    LstmNetwork net;
};

struct TrainingInfo {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    double final_loss = 0.0;
};

struct TrainedModel {
    std::variant<MlpModel, LstmModel, KnnModel, LinearSvmModel, LogisticModel, RandomGuessModel> model;
    TrainingInfo info;

    std::string kind() const {
        struct V {
            std::string operator()(const MlpModel&) const { return "mlp"; }
            std::string operator()(const LstmModel&) const { return "lstm"; }
            std::string operator()(const KnnModel&) const { return "knn"; }
            std::string operator()(const LinearSvmModel&) const { return "linear_svm"; }
            std::string operator()(const LogisticModel&) const { return "logistic_regression"; }
            std::string operator()(const RandomGuessModel&) const { return "random_guess"; }
        };
        return std::visit(V{}, model);
    }

    // 0 for the random guesser, which ignores its input.
    std::size_t input_width() const {
        struct V {
            std::size_t operator()(const MlpModel& m) const { return m.net.input_width(); }
            std::size_t operator()(const LstmModel& m) const { return m.net.input_width(); }
            std::size_t operator()(const KnnModel& m) const { return m.x.cols; }
            std::size_t operator()(const LinearSvmModel& m) const { return m.weight.cols - 1; }
            std::size_t operator()(const LogisticModel& m) const { return m.linear.in_width(); }
            std::size_t operator()(const RandomGuessModel&) const { return 0; }
        };
        return std::visit(V{}, model);
    }
};

inline std::uint64_t config_hash(const MlpConfig& c) {
    std::ostringstream s;
    s << "mlp|" << c.input_width << '|';
    for (auto h : c.hidden) s << h << ',';
    s << '|' << c.output << '|' << c.lr << '|' << c.epochs << '|' << c.batch_size << '|' << c.l2 << '|' << c.seed;
    return stable_hash(s.str());
}

inline std::uint64_t config_hash(const LstmConfig& c) {
    std::ostringstream s;
    s << "lstm|" << c.input_width << '|' << c.hidden_layers << '|' << c.hidden_size << '|' << c.output << '|' << c.l2
      << '|' << c.lr << '|' << c.epochs << '|' << c.batch_size << '|' << c.window_len << '|' << to_string(c.mode) << '|'
      << c.seed;
    return stable_hash(s.str());
}

// ---------------------------------------------------------------------------
// Segment MLP

inline TrainedModel train_mlp(const Matrix& x, std::span<const int> y, MlpConfig cfg) {
    if (x.rows == 0) throw Error(ErrorCode::EmptyTrainingSet, "mlp: no training rows", std::nullopt, "mlp");
    if (cfg.input_width == 0) cfg.input_width = x.cols;
    if (x.cols != cfg.input_width) {
        throw Error(ErrorCode::ShapeMismatch, "mlp: data has " + std::to_string(x.cols) + " columns, config expects " +
                                                  std::to_string(cfg.input_width), std::nullopt, "mlp");
    }
    if (y.size() != x.rows) throw Error(ErrorCode::ShapeMismatch, "mlp: label count differs from row count", std::nullopt, "mlp");
    if (cfg.batch_size == 0 || cfg.epochs == 0) throw Error(ErrorCode::InvalidConfig, "mlp: epochs and batch size must be positive");
    check_labels(y, cfg.output);

    Rng rng(cfg.seed);
    MlpModel m{cfg, MlpNetwork(cfg.input_width, cfg.hidden, cfg.output)};
    m.net.init(rng);
    auto params = m.net.params();
    AdamState adam;
    adam.hyper.lr = cfg.lr;

    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    double epoch_loss = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            zero_grads(params);
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t b = start; b < end; ++b) {
                epoch_loss += m.net.accumulate(x.row(order[b]), static_cast<std::size_t>(y[order[b]]), scale);
            }
            adam_step(adam, params, cfg.l2);
        }
        epoch_loss /= static_cast<double>(order.size());
    }
    TrainingInfo info{cfg.seed, config_hash(cfg), epoch_loss};
    return TrainedModel{std::move(m), info};
}

inline TrainedModel train_mlp(const DataMatrix& train, const MlpConfig& cfg) {
    return train_mlp(train.x, labels_for(train, Target::Segment), cfg);
}

inline const MlpModel& as_mlp(const TrainedModel& m) {
    const auto* p = std::get_if<MlpModel>(&m.model);
    if (p == nullptr) throw Error(ErrorCode::ShapeMismatch, "expected an mlp model, got " + m.kind());
    return *p;
}

inline Vector predict_mlp(const TrainedModel& model, std::span<const double> x) {
    return softmax(as_mlp(model).net.logits(x));
}

// ---------------------------------------------------------------------------
// Direction LSTM

// One participant-task as a time series of sample rows (ordered by hit) with
// a class label and train/test membership per step.
struct LabeledSequence {
    Matrix steps;
    std::vector<int> labels;
    std::vector<unsigned char> in_train;
};

struct SequenceWindow {
    std::size_t sequence = 0;
    std::size_t end = 0;  // index of the last step
};

// Sliding windows of length W, stride 1; each window belongs to the split
// of its last step.
inline std::vector<SequenceWindow> sliding_windows(std::span<const LabeledSequence> seqs, std::size_t W, bool train) {
    std::vector<SequenceWindow> out;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        if (seqs[s].steps.rows < W) {
            throw Error(ErrorCode::SequenceTooShort, "sequence " + std::to_string(s) + " has " +
                                                         std::to_string(seqs[s].steps.rows) + " steps, window is " +
                                                         std::to_string(W), s);
        }
        for (std::size_t e = W - 1; e < seqs[s].steps.rows; ++e) {
            if ((seqs[s].in_train[e] != 0) == train) out.push_back({s, e});
        }
    }
    return out;
}

inline Matrix window_steps(const LabeledSequence& seq, std::size_t end, std::size_t W) {
    Matrix m(W, seq.steps.cols);
    std::copy(seq.steps.data.begin() + static_cast<std::ptrdiff_t>((end + 1 - W) * seq.steps.cols),
              seq.steps.data.begin() + static_cast<std::ptrdiff_t>((end + 1) * seq.steps.cols), m.data.begin());
    return m;
}

inline void check_sequences(std::span<const LabeledSequence> seqs, const LstmConfig& cfg) {
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        const auto& q = seqs[s];
        if (q.steps.cols != cfg.input_width) {
            throw Error(ErrorCode::ShapeMismatch, "sequence " + std::to_string(s) + " has width " +
                                                      std::to_string(q.steps.cols) + ", expected " +
                                                      std::to_string(cfg.input_width), s);
        }
        if (q.labels.size() != q.steps.rows || q.in_train.size() != q.steps.rows) {
            throw Error(ErrorCode::ShapeMismatch, "sequence " + std::to_string(s) + " labels/mask length differs", s);
        }
        check_labels(q.labels, cfg.output);
    }
}

inline TrainedModel train_lstm(std::span<const LabeledSequence> seqs, LstmConfig cfg) {
    if (seqs.empty()) throw Error(ErrorCode::EmptyTrainingSet, "lstm: no sequences", std::nullopt, "lstm");
    if (cfg.input_width == 0) cfg.input_width = seqs.front().steps.cols;
    if (cfg.mode == SequenceMode::Windowed && cfg.window_len < 2) {
        throw Error(ErrorCode::InvalidConfig, "lstm window length must be >= 2", std::nullopt, "lstm");
    }
    if (cfg.batch_size == 0 || cfg.epochs == 0) throw Error(ErrorCode::InvalidConfig, "lstm: epochs and batch size must be positive");
    check_sequences(seqs, cfg);

    Rng rng(cfg.seed);
    LstmModel m{cfg, LstmNetwork(cfg.input_width, cfg.hidden_layers, cfg.hidden_size, cfg.output)};
    m.net.init(rng);
    auto params = m.net.params();
    AdamState adam;
    adam.hyper.lr = cfg.lr;
    double epoch_loss = 0.0;

    if (cfg.mode == SequenceMode::Windowed) {
        const auto windows = sliding_windows(seqs, cfg.window_len, true);
        if (windows.empty()) throw Error(ErrorCode::EmptyTrainingSet, "lstm: no training windows", std::nullopt, "lstm");
        std::vector<Matrix> inputs;
        std::vector<int> targets;
        inputs.reserve(windows.size());
        for (const auto& w : windows) {
            inputs.push_back(window_steps(seqs[w.sequence], w.end, cfg.window_len));
            targets.push_back(seqs[w.sequence].labels[w.end]);
        }
        std::vector<std::size_t> order(windows.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(std::span<std::size_t>(order));
            epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(start + cfg.batch_size, order.size());
                zero_grads(params);
                const double scale = 1.0 / static_cast<double>(end - start);
                for (std::size_t b = start; b < end; ++b) {
                    const int target = targets[order[b]];
                    epoch_loss += m.net.accumulate(inputs[order[b]], std::span<const int>(&target, 1), {}, true, scale);
                }
                adam_step(adam, params, cfg.l2);
            }
            epoch_loss /= static_cast<double>(order.size());
        }
    } else {
        std::vector<std::size_t> order(seqs.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t scored_total = 0;
        for (const auto& q : seqs) scored_total += static_cast<std::size_t>(std::count(q.in_train.begin(), q.in_train.end(), 1));
        if (scored_total == 0) throw Error(ErrorCode::EmptyTrainingSet, "lstm: no training steps", std::nullopt, "lstm");
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(std::span<std::size_t>(order));
            epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(start + cfg.batch_size, order.size());
                std::size_t scored = 0;
                for (std::size_t b = start; b < end; ++b) {
                    const auto& q = seqs[order[b]];
                    scored += static_cast<std::size_t>(std::count(q.in_train.begin(), q.in_train.end(), 1));
                }
                if (scored == 0) continue;
                zero_grads(params);
                const double scale = 1.0 / static_cast<double>(scored);
                for (std::size_t b = start; b < end; ++b) {
                    const auto& q = seqs[order[b]];
                    epoch_loss += m.net.accumulate(q.steps, q.labels, q.in_train, false, scale);
                }
                adam_step(adam, params, cfg.l2);
            }
            epoch_loss /= static_cast<double>(scored_total);
        }
    }
    TrainingInfo info{cfg.seed, config_hash(cfg), epoch_loss};
    return TrainedModel{std::move(m), info};
}

inline const LstmModel& as_lstm(const TrainedModel& m) {
    const auto* p = std::get_if<LstmModel>(&m.model);
    if (p == nullptr) throw Error(ErrorCode::ShapeMismatch, "expected an lstm model, got " + m.kind());
    return *p;
}

// Class probabilities from the final step of `window`.
inline Vector predict_lstm(const TrainedModel& model, const Matrix& window) {
    const auto& m = as_lstm(model);
    if (m.config.mode == SequenceMode::Windowed && window.rows != m.config.window_len) {
        throw Error(ErrorCode::ShapeMismatch, "lstm window has " + std::to_string(window.rows) + " steps, model expects " +
                                                  std::to_string(m.config.window_len));
    }
    return softmax(m.net.final_logits(window));
}

// Per-step class probabilities over a whole sequence.
inline std::vector<Vector> predict_lstm_steps(const TrainedModel& model, const Matrix& seq) {
    std::vector<Vector> out;
    for (auto& logits : as_lstm(model).net.step_logits(seq)) out.push_back(softmax(logits));
    return out;
}

struct HeldOutPredictions {
    std::vector<int> predicted;
    std::vector<int> truth;
};

// Predictions on the test part: windows ending on a test step (windowed) or
// every test step (full-sequence).
inline HeldOutPredictions lstm_test_predictions(const TrainedModel& model, std::span<const LabeledSequence> seqs) {
    const auto& m = as_lstm(model);
    check_sequences(seqs, m.config);
    HeldOutPredictions out;
    if (m.config.mode == SequenceMode::Windowed) {
        for (const auto& w : sliding_windows(seqs, m.config.window_len, false)) {
            const Vector p = predict_lstm(model, window_steps(seqs[w.sequence], w.end, m.config.window_len));
            out.predicted.push_back(static_cast<int>(argmax(p)));
            out.truth.push_back(seqs[w.sequence].labels[w.end]);
        }
    } else {
        for (const auto& q : seqs) {
            const auto probs = predict_lstm_steps(model, q.steps);
            for (std::size_t t = 0; t < q.steps.rows; ++t) {
                if (q.in_train[t]) continue;
                out.predicted.push_back(static_cast<int>(argmax(probs[t])));
                out.truth.push_back(q.labels[t]);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Baselines

inline TrainedModel train_baseline(const BaselineKind& kind, const Matrix& x, std::span<const int> y,
                                   std::size_t num_classes, std::uint64_t seed = 0) {
    if (x.rows == 0 || y.empty()) throw Error(ErrorCode::EmptyTrainingSet, "baseline: no training rows");
    if (y.size() != x.rows) throw Error(ErrorCode::ShapeMismatch, "baseline: label count differs from row count");
    if (num_classes == 0) throw Error(ErrorCode::InvalidConfig, "baseline: num_classes must be positive");
    check_labels(y, num_classes);
    struct V {
        const Matrix& x;
        std::span<const int> y;
        std::size_t k;
        std::uint64_t seed;
        TrainedModel operator()(const KnnConfig& c) const { return {train_knn(c, x, y, k), {seed, 0, 0.0}}; }
        TrainedModel operator()(const LinearSvmConfig& c) const {
            return {train_linear_svm(c, x, y, k, seed), {seed, 0, 0.0}};
        }
        TrainedModel operator()(const LogisticConfig& c) const {
            auto [m, loss] = train_logistic(c, x, y, k, seed);
            return {std::move(m), {seed, 0, loss}};
        }
        TrainedModel operator()(const RandomGuessConfig&) const { return {RandomGuessModel{k, seed}, {seed, 0, 0.0}}; }
    };
    return std::visit(V{x, y, num_classes, seed}, kind);
}

// Class predictions for every row of `x`.
inline std::vector<int> predict_classes(const TrainedModel& model, const Matrix& x) {
    std::vector<int> out;
    out.reserve(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const auto row = x.row(r);
        struct V {
            std::span<const double> row;
            std::size_t r;
            int operator()(const MlpModel& m) const { return static_cast<int>(argmax(m.net.logits(row))); }
            int operator()(const LstmModel&) const {
                throw Error(ErrorCode::ShapeMismatch, "lstm models predict windows, not rows");
            }
            int operator()(const KnnModel& m) const { return static_cast<int>(argmax(knn_votes(m, row))); }
            int operator()(const LinearSvmModel& m) const { return static_cast<int>(argmax(svm_scores(m, row))); }
            int operator()(const LogisticModel& m) const {
                if (row.size() != m.linear.in_width()) {
                    throw Error(ErrorCode::ShapeMismatch, "logistic regression input width mismatch");
                }
                return static_cast<int>(argmax(logistic_proba(m, row)));
            }
            int operator()(const RandomGuessModel& m) const { return random_guess(m, r); }
        };
        out.push_back(std::visit(V{row, r}, model.model));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline ModelContainer to_container(const TrainedModel& model) {
    ModelContainer c;
    c.kind = model.kind();
    c.metadata = {{"seed", model.info.seed}, {"config_hash", model.info.config_hash}, {"final_loss", model.info.final_loss}};
    struct V {
        ModelContainer& c;
        void operator()(const MlpModel& m) const {
            const auto& k = m.config;
            c.config = {{"input_width", k.input_width}, {"hidden", k.hidden},   {"output", k.output},
                        {"lr", k.lr},                   {"epochs", k.epochs},   {"batch_size", k.batch_size},
                        {"l2", k.l2},                   {"seed", k.seed}};
            for (std::size_t i = 0; i < m.net.layers.size(); ++i) {
                c.add("dense" + std::to_string(i) + ".weight", m.net.layers[i].weight);
                c.add("dense" + std::to_string(i) + ".bias", m.net.layers[i].bias);
            }
        }
        void operator()(const LstmModel& m) const {
            const auto& k = m.config;
            c.config = {{"input_width", k.input_width}, {"hidden_layers", k.hidden_layers},
                        {"hidden_size", k.hidden_size}, {"output", k.output},
                        {"l2", k.l2},                   {"lr", k.lr},
                        {"epochs", k.epochs},           {"batch_size", k.batch_size},
                        {"window_len", k.window_len},   {"mode", std::string(to_string(k.mode))},
                        {"seed", k.seed}};
            for (std::size_t l = 0; l < m.net.cells.size(); ++l) {
                c.add("lstm" + std::to_string(l) + ".weight", m.net.cells[l].weight);
                c.add("lstm" + std::to_string(l) + ".bias", m.net.cells[l].bias);
            }
            c.add("head.weight", m.net.head.weight);
            c.add("head.bias", m.net.head.bias);
        }
        void operator()(const KnnModel& m) const {
            c.config = {{"k", m.config.k}, {"num_classes", m.num_classes}};
            c.add("train.x", m.x);
            Matrix y(1, m.y.size());
            for (std::size_t i = 0; i < m.y.size(); ++i) y.data[i] = m.y[i];
            c.add("train.y", std::move(y));
        }
        void operator()(const LinearSvmModel& m) const {
            c.config = {{"lambda", m.config.lambda}, {"epochs", m.config.epochs}, {"num_classes", m.num_classes}};
            c.add("weight", m.weight);
        }
        void operator()(const LogisticModel& m) const {
            c.config = {{"lr", m.config.lr},
                        {"epochs", m.config.epochs},
                        {"batch_size", m.config.batch_size},
                        {"num_classes", m.num_classes}};
            c.add("linear.weight", m.linear.weight);
            c.add("linear.bias", m.linear.bias);
        }
        void operator()(const RandomGuessModel& m) const {
            c.config = {{"num_classes", m.num_classes}, {"seed", m.seed}};
        }
    };
    std::visit(V{c}, model.model);
    return c;
}

inline TrainedModel from_container(const ModelContainer& c) {
    try {
        TrainedModel out;
        out.info.seed = c.metadata.at("seed").get<std::uint64_t>();
        out.info.config_hash = c.metadata.at("config_hash").get<std::uint64_t>();
        out.info.final_loss = c.metadata.at("final_loss").get<double>();
        const auto& j = c.config;
        if (c.kind == "mlp") {
            MlpConfig k;
            k.input_width = j.at("input_width");
            k.hidden = j.at("hidden").get<std::vector<std::size_t>>();
            k.output = j.at("output");
            k.lr = j.at("lr");
            k.epochs = j.at("epochs");
            k.batch_size = j.at("batch_size");
            k.l2 = j.at("l2");
            k.seed = j.at("seed");
            MlpModel m{k, MlpNetwork(k.input_width, k.hidden, k.output)};
            for (std::size_t i = 0; i < m.net.layers.size(); ++i) {
                c.load_into("dense" + std::to_string(i) + ".weight", m.net.layers[i].weight.data);
                c.load_into("dense" + std::to_string(i) + ".bias", m.net.layers[i].bias);
            }
            out.model = std::move(m);
        } else if (c.kind == "lstm") {
            LstmConfig k;
            k.input_width = j.at("input_width");
            k.hidden_layers = j.at("hidden_layers");
            k.hidden_size = j.at("hidden_size");
            k.output = j.at("output");
            k.l2 = j.at("l2");
            k.lr = j.at("lr");
            k.epochs = j.at("epochs");
            k.batch_size = j.at("batch_size");
            k.window_len = j.at("window_len");
            k.mode = j.at("mode").get<std::string>() == "windowed" ? SequenceMode::Windowed : SequenceMode::FullSequence;
            k.seed = j.at("seed");
            LstmModel m{k, LstmNetwork(k.input_width, k.hidden_layers, k.hidden_size, k.output)};
            for (std::size_t l = 0; l < m.net.cells.size(); ++l) {
                c.load_into("lstm" + std::to_string(l) + ".weight", m.net.cells[l].weight.data);
                c.load_into("lstm" + std::to_string(l) + ".bias", m.net.cells[l].bias);
            }
            c.load_into("head.weight", m.net.head.weight.data);
            c.load_into("head.bias", m.net.head.bias);
            out.model = std::move(m);
        } else if (c.kind == "knn") {
            KnnModel m;
            m.config.k = j.at("k");
            m.num_classes = j.at("num_classes");
            m.x = c.tensor("train.x");
            for (double v : c.tensor("train.y").data) m.y.push_back(static_cast<int>(v));
            out.model = std::move(m);
        } else if (c.kind == "linear_svm") {
            LinearSvmModel m;
            m.config.lambda = j.at("lambda");
            m.config.epochs = j.at("epochs");
            m.num_classes = j.at("num_classes");
            m.weight = c.tensor("weight");
            out.model = std::move(m);
        } else if (c.kind == "logistic_regression") {
            LogisticModel m;
            m.config.lr = j.at("lr");
            m.config.epochs = j.at("epochs");
            m.config.batch_size = j.at("batch_size");
            m.num_classes = j.at("num_classes");
            const Matrix& w = c.tensor("linear.weight");
            m.linear = DenseLayer(w.cols, w.rows);
            m.linear.weight = w;
            c.load_into("linear.bias", m.linear.bias);
            out.model = std::move(m);
        } else if (c.kind == "random_guess") {
            out.model = RandomGuessModel{j.at("num_classes").get<std::size_t>(), j.at("seed").get<std::uint64_t>()};
        } else {
            throw Error(ErrorCode::SerializationError, "unknown model kind '" + c.kind + "'");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SerializationError, std::string("bad model config: ") + e.what());
    }
}

inline void save_model(const std::filesystem::path& path, const TrainedModel& model) {
    save_container(path, to_container(model));
}

inline TrainedModel load_model(const std::filesystem::path& path) { return from_container(load_container(path)); }

}  // namespace intent
