#pragma once

// Two-step architecture: a gaze MLP predicts the segment, its probability
// output joins the resistance features, and a stacked LSTM predicts the
// movement direction.

#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "intent/dataset.hpp"
#include "intent/error.hpp"
#include "intent/features.hpp"
#include "intent/models/model.hpp"
#include "intent/pipeline/metrics.hpp"
#include "intent/pipeline/split.hpp"

namespace intent {

struct PipelineConfig {
    TaskShape shape = TaskShape::Diamond;
    std::uint64_t seed = 42;
    SplitSpec split;  // the seed field is replaced by a per-shape derived seed
    MlpConfig mlp;
    LstmConfig lstm;
    KnnConfig knn;
    LinearSvmConfig svm;
    LogisticConfig logreg;
    SetupId direction_setup = SetupId::D6;
    FeatureOptions features;
};

inline std::uint64_t config_hash(const PipelineConfig& c) {
    std::ostringstream s;
    s << "pipeline|" << c.seed << '|' << c.split.train_fraction << '|' << static_cast<int>(c.split.stratify_by) << '|'
      << config_hash(c.mlp) << '|' << config_hash(c.lstm) << '|' << c.knn.k << '|' << c.svm.lambda << '|' << c.svm.epochs
      << '|' << c.logreg.lr << '|' << c.logreg.epochs << '|' << c.logreg.batch_size << '|' << to_string(c.direction_setup)
      << '|' << c.features.mmav2_positive_tail << '|' << c.features.log_epsilon;
    return stable_hash(s.str());
}

// Seed keys. Window rows and raw per-hit rows have separate partitions.
inline std::uint64_t split_seed(std::uint64_t root, TaskShape shape, bool raw_rows) {
    return derive_seed(root, std::string(raw_rows ? "split/raw/" : "split/windows/") + std::string(to_string(shape)));
}

inline std::uint64_t step1_seed(std::uint64_t root, TaskShape shape) {
    return derive_seed(root, "step1/mlp/" + std::string(to_string(shape)));
}

// Min-max scaler fitted on the training rows, applied to every row.
inline Matrix scale_by_train(const Matrix& x, std::span<const std::size_t> train) {
    return apply_scaler(fit_scaler(select_rows(x, train)), x);
}

// Consecutive rows with the same participant form one sequence, in row order.
inline std::vector<LabeledSequence> build_sequences(const Matrix& x, std::span<const RowInfo> rows,
                                                    std::span<const unsigned char> in_train, Target target) {
    if (x.rows != rows.size() || in_train.size() != rows.size()) {
        throw Error(ErrorCode::RowCountMismatch, "sequence rows, labels and split mask differ in length");
    }
    std::vector<LabeledSequence> out;
    const auto labels = labels_for(rows, target);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r == 0 || rows[r].participant_id != rows[r - 1].participant_id || rows[r].shape != rows[r - 1].shape) {
            out.emplace_back();
            out.back().steps = Matrix(0, x.cols);
        }
        auto& s = out.back();
        s.steps.append_row(x.row(r));
        s.labels.push_back(labels[r]);
        s.in_train.push_back(in_train[r]);
    }
    return out;
}

inline std::size_t count_participants(std::span<const ParticipantRecord> records, TaskShape shape) {
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (r.shape == shape) ids.insert(r.participant_id);
    }
    return ids.size();
}

// Step 1 output for one shape: the trained MLP, its held-out metrics and the
// probability rows for every window sample (train and test).
struct SegmentStep {
    TrainedModel model;
    Metrics metrics;
    Matrix probs;  // windows x 4
};

inline SegmentStep run_segment_step(const ShapeDataset& ds, const SplitIndices& split, const MlpConfig& base,
                                    std::uint64_t seed) {
    const Matrix gaze = scale_by_train(ds.gaze, split.train);
    const auto labels = labels_for(ds.window_rows, Target::Segment);
    std::vector<int> train_labels;
    for (std::size_t i : split.train) train_labels.push_back(labels[i]);
    MlpConfig cfg = base;
    cfg.input_width = gaze.cols;
    cfg.output = kSegments;
    cfg.seed = seed;
    SegmentStep out{train_mlp(select_rows(gaze, split.train), train_labels, cfg), {}, Matrix(gaze.rows, kSegments)};
    std::vector<int> predicted, truth;
    for (std::size_t r = 0; r < gaze.rows; ++r) {
        const Vector p = predict_mlp(out.model, gaze.row(r));
        std::copy(p.begin(), p.end(), out.probs.row(r).begin());
    }
    for (std::size_t i : split.test) {
        predicted.push_back(static_cast<int>(argmax(out.probs.row(i))));
        truth.push_back(labels[i]);
    }
    out.metrics = evaluate(predicted, truth, kSegments);
    return out;
}

// Scales `data` by its training rows, arranges it into per-participant
// sequences and trains/evaluates the direction LSTM.
inline std::pair<TrainedModel, Metrics> run_direction_lstm(const DataMatrix& data, const SplitIndices& split,
                                                            const LstmConfig& base, std::uint64_t seed) {
    const Matrix x = scale_by_train(data.x, split.train);
    const auto seqs = build_sequences(x, data.rows, split.mask(data.rows.size()), Target::Direction);
    LstmConfig cfg = base;
    cfg.input_width = x.cols;
    cfg.output = 2;
    cfg.seed = seed;
    TrainedModel model = train_lstm(seqs, cfg);
    const auto held = lstm_test_predictions(model, seqs);
    return {std::move(model), evaluate(held.predicted, held.truth, 2)};
}

struct PipelineResult {
    TaskShape shape = TaskShape::Diamond;
    SetupId direction_setup = SetupId::D6;
    Metrics segment;
    Metrics direction;
    Matrix step1_probs;
    double step1_final_loss = 0.0;
    double step2_final_loss = 0.0;
    std::uint64_t root_seed = 0;
    std::uint64_t step1_seed = 0;
    std::uint64_t step2_seed = 0;
    std::uint64_t config_hash = 0;

    bool operator==(const PipelineResult&) const = default;
};

inline std::uint64_t cell_seed(std::uint64_t root, std::string_view key) { return derive_seed(root, key); }

inline std::string direction_lstm_key(SetupId setup, TaskShape shape) {
    return "direction/LSTM/" + to_string(setup) + "/" + std::string(to_string(shape));
}

inline PipelineResult run_two_step(std::span<const ParticipantRecord> records, const PipelineConfig& cfg) {
    if (count_participants(records, cfg.shape) < 2) {
        throw Error(ErrorCode::TooFewRows, "two-step pipeline needs at least 2 participants", std::nullopt, "pipeline");
    }
    PipelineResult res;
    res.shape = cfg.shape;
    res.direction_setup = cfg.direction_setup;
    res.root_seed = cfg.seed;
    res.config_hash = config_hash(cfg);

    ShapeDataset ds;
    try {
        ds = build_shape_dataset(records, cfg.shape, cfg.features);
    } catch (const Error& e) {
        throw e.with_context("features");
    }
    SplitSpec spec = cfg.split;
    spec.seed = split_seed(cfg.seed, cfg.shape, false);
    const SplitIndices split = split_indices(ds.window_rows, spec);

    res.step1_seed = step1_seed(cfg.seed, cfg.shape);
    SegmentStep step1 = [&] {
        try {
            return run_segment_step(ds, split, cfg.mlp, res.step1_seed);
        } catch (const Error& e) {
            throw e.with_context("step1");
        }
    }();
    res.segment = step1.metrics;
    res.step1_probs = step1.probs;
    res.step1_final_loss = step1.model.info.final_loss;

    res.step2_seed = cell_seed(cfg.seed, direction_lstm_key(cfg.direction_setup, cfg.shape));
    try {
        const DataMatrix data = assemble_setup(cfg.direction_setup, ds, &step1.probs);
        SplitIndices split2 = split;
        if (cfg.direction_setup == SetupId::D1) {
            SplitSpec raw_spec = cfg.split;
            raw_spec.seed = split_seed(cfg.seed, cfg.shape, true);
            split2 = split_indices(ds.raw_rows, raw_spec);
        }
        auto [model, metrics] = run_direction_lstm(data, split2, cfg.lstm, res.step2_seed);
        res.direction = std::move(metrics);
        res.step2_final_loss = model.info.final_loss;
    } catch (const Error& e) {
        throw e.with_context("step2");
    }
    return res;
}

}  // namespace intent
