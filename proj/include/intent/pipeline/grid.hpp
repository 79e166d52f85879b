#pragma once

// The (model x setup x shape) experiment grid behind the comparison tables.

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intent/pipeline/two_step.hpp"

namespace intent {

enum class ModelKind { NN, LSTM, KNN, SVM, LR };
enum class Step { Segment, Direction };

inline constexpr std::string_view to_string(ModelKind m) {
    switch (m) {
        case ModelKind::NN: return "NN";
        case ModelKind::LSTM: return "LSTM";
        case ModelKind::KNN: return "KNN";
        case ModelKind::SVM: return "SVM";
        case ModelKind::LR: return "LR";
    }
    return "?";
}

inline constexpr std::string_view to_string(Step s) { return s == Step::Segment ? "segment" : "direction"; }

inline constexpr std::array<ModelKind, 4> kSegmentModels = {ModelKind::NN, ModelKind::KNN, ModelKind::SVM, ModelKind::LR};
inline constexpr std::array<ModelKind, 4> kDirectionModels = {ModelKind::LSTM, ModelKind::KNN, ModelKind::SVM, ModelKind::LR};
inline constexpr std::array<SetupId, 4> kSegmentSetups = {SetupId::D1, SetupId::D2, SetupId::D3, SetupId::D5};

struct CellRequest {
    ModelKind model = ModelKind::NN;
    SetupId setup = SetupId::D3;
    TaskShape shape = TaskShape::Diamond;
    Step step = Step::Segment;

    bool operator==(const CellRequest&) const = default;
};

inline std::string cell_key(const CellRequest& c) {
    return std::string(to_string(c.step)) + "/" + std::string(to_string(c.model)) + "/" + to_string(c.setup) + "/" +
           std::string(to_string(c.shape));
}

inline bool is_valid(const CellRequest& c) {
    if (c.step == Step::Segment) {
        return std::find(kSegmentModels.begin(), kSegmentModels.end(), c.model) != kSegmentModels.end() &&
               std::find(kSegmentSetups.begin(), kSegmentSetups.end(), c.setup) != kSegmentSetups.end();
    }
    return std::find(kDirectionModels.begin(), kDirectionModels.end(), c.model) != kDirectionModels.end();
}

enum class GridSelection { Segment, Direction, All };

inline std::vector<CellRequest> grid_cells(GridSelection sel, std::span<const TaskShape> shapes) {
    std::vector<CellRequest> out;
    for (TaskShape shape : shapes) {
        if (sel != GridSelection::Direction) {
            for (ModelKind m : kSegmentModels) {
                for (SetupId s : kSegmentSetups) out.push_back({m, s, shape, Step::Segment});
            }
        }
        if (sel != GridSelection::Segment) {
            for (SetupId s : kAllSetups) {
                for (ModelKind m : kDirectionModels) out.push_back({m, s, shape, Step::Direction});
            }
        }
    }
    return out;
}

struct CellResult {
    CellRequest request;
    Metrics metrics;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;  // excluded from equality
    bool operator==(const CellResult& o) const { return request == o.request && metrics == o.metrics && seed == o.seed; }
};

struct RandomGuessEntry {
    Step step = Step::Segment;
    TaskShape shape = TaskShape::Diamond;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
    bool operator==(const RandomGuessEntry&) const = default;
};

// One comparison table. Segment tables have models as rows and setups as
// columns; direction tables have setups as rows and models as columns.
struct ReportTable {
    Step step = Step::Segment;
    TaskShape shape = TaskShape::Diamond;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::optional<CellResult>> cells;  // row-major

    std::string title() const {
        return std::string(step == Step::Segment ? "Segment prediction, " : "Direction prediction, ") +
               std::string(to_string(shape)) + " task";
    }
    const std::optional<CellResult>& at(std::size_t r, std::size_t c) const { return cells[r * col_labels.size() + c]; }

    // Index of the best cell by accuracy, then F1, then position.
    std::optional<std::size_t> best() const {
        std::optional<std::size_t> b;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cells[i]) continue;
            if (!b) {
                b = i;
                continue;
            }
            const auto& x = cells[i]->metrics;
            const auto& y = cells[*b]->metrics;
            if (x.accuracy > y.accuracy || (x.accuracy == y.accuracy && x.macro_f1 > y.macro_f1)) b = i;
        }
        return b;
    }

    bool operator==(const ReportTable&) const = default;
};

struct ReportTables {
    std::uint64_t root_seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<ReportTable> tables;
    std::vector<RandomGuessEntry> random_guess;
    std::vector<CellResult> cells;  // in request order

    bool operator==(const ReportTables&) const = default;
};

inline constexpr std::size_t kRandomGuessDraws = 100000;

namespace detail {

inline ReportTable empty_table(Step step, TaskShape shape) {
    ReportTable t;
    t.step = step;
    t.shape = shape;
    if (step == Step::Segment) {
        for (ModelKind m : kSegmentModels) t.row_labels.emplace_back(to_string(m));
        for (SetupId s : kSegmentSetups) t.col_labels.push_back(to_string(s));
    } else {
        for (SetupId s : kAllSetups) t.row_labels.push_back(to_string(s));
        for (ModelKind m : kDirectionModels) t.col_labels.emplace_back(to_string(m));
    }
    t.cells.resize(t.row_labels.size() * t.col_labels.size());
    return t;
}

inline std::size_t table_slot(const ReportTable& t, const CellRequest& c) {
    const std::string model(to_string(c.model));
    const std::string setup = to_string(c.setup);
    const auto& row_key = c.step == Step::Segment ? model : setup;
    const auto& col_key = c.step == Step::Segment ? setup : model;
    const auto r = static_cast<std::size_t>(std::find(t.row_labels.begin(), t.row_labels.end(), row_key) - t.row_labels.begin());
    const auto col =
        static_cast<std::size_t>(std::find(t.col_labels.begin(), t.col_labels.end(), col_key) - t.col_labels.begin());
    return r * t.col_labels.size() + col;
}

// Lazily built per-shape inputs shared by the cells of that shape.
struct ShapeContext {
    ShapeDataset ds;
    SplitIndices windows;
    SplitIndices raw;
    std::optional<SegmentStep> step1;
};

}  // namespace detail

// Trains and evaluates a row-wise model (NN or a baseline) on scaled data.
inline Metrics run_row_cell(ModelKind kind, const DataMatrix& data, const SplitIndices& split, Target target,
                            const PipelineConfig& cfg, std::uint64_t seed) {
    const std::size_t classes = target == Target::Segment ? kSegments : 2;
    const Matrix x = scale_by_train(data.x, split.train);
    const Matrix train_x = select_rows(x, split.train);
    const Matrix test_x = select_rows(x, split.test);
    const auto labels = labels_for(data, target);
    std::vector<int> train_y, test_y;
    for (std::size_t i : split.train) train_y.push_back(labels[i]);
    for (std::size_t i : split.test) test_y.push_back(labels[i]);

    TrainedModel model = [&]() -> TrainedModel {
        switch (kind) {
            case ModelKind::NN: {
                MlpConfig m = cfg.mlp;
                m.input_width = x.cols;
                m.output = classes;
                m.seed = seed;
                return train_mlp(train_x, train_y, m);
            }
            case ModelKind::KNN: return train_baseline(cfg.knn, train_x, train_y, classes, seed);
            case ModelKind::SVM: return train_baseline(cfg.svm, train_x, train_y, classes, seed);
            case ModelKind::LR: return train_baseline(cfg.logreg, train_x, train_y, classes, seed);
            case ModelKind::LSTM: break;
        }
        throw Error(ErrorCode::InvalidCell, "lstm is not a row model");
    }();
    return evaluate(predict_classes(model, test_x), test_y, classes);
}

// Runs every requested cell. Each cell gets its own seed derived from the
// root seed and the cell key; direction cells that read first-model
// probabilities share one segment MLP per shape.
using CellCallback = std::function<void(const CellResult&, std::size_t done, std::size_t total)>;

inline ReportTables run_grid(std::span<const ParticipantRecord> records, std::span<const CellRequest> requests,
                             const PipelineConfig& cfg, const CellCallback& on_cell = {}) {
    for (const auto& c : requests) {
        if (!is_valid(c)) throw Error(ErrorCode::InvalidCell, "invalid grid cell " + cell_key(c));
    }
    ReportTables out;
    out.root_seed = cfg.seed;
    out.config_hash = config_hash(cfg);

    std::map<TaskShape, std::unique_ptr<detail::ShapeContext>> contexts;
    auto context = [&](TaskShape shape) -> detail::ShapeContext& {
        auto& slot = contexts[shape];
        if (!slot) {
            if (count_participants(records, shape) < 2) {
                throw Error(ErrorCode::TooFewRows, "grid needs at least 2 participants per shape", std::nullopt,
                            std::string(to_string(shape)));
            }
            slot = std::make_unique<detail::ShapeContext>();
            slot->ds = build_shape_dataset(records, shape, cfg.features);
            SplitSpec spec = cfg.split;
            spec.seed = split_seed(cfg.seed, shape, false);
            slot->windows = split_indices(slot->ds.window_rows, spec);
            spec.seed = split_seed(cfg.seed, shape, true);
            slot->raw = split_indices(slot->ds.raw_rows, spec);
        }
        return *slot;
    };

    // Tables in a fixed order: per shape, segment then direction.
    std::vector<std::pair<Step, TaskShape>> table_keys;
    for (const auto& c : requests) {
        const std::pair key{c.step, c.shape};
        if (std::find(table_keys.begin(), table_keys.end(), key) == table_keys.end()) table_keys.push_back(key);
    }
    std::stable_sort(table_keys.begin(), table_keys.end());
    for (const auto& [step, shape] : table_keys) out.tables.push_back(detail::empty_table(step, shape));

    for (const auto& req : requests) {
        const auto t0 = std::chrono::steady_clock::now();
        CellResult cell{req, {}, cell_seed(cfg.seed, cell_key(req)), 0.0};
        try {
            auto& ctx = context(req.shape);
            const Target target = req.step == Step::Segment ? Target::Segment : Target::Direction;
            const SetupParts parts = setup_parts(req.setup);
            if (parts.probs && !ctx.step1) {
                ctx.step1 = run_segment_step(ctx.ds, ctx.windows, cfg.mlp, step1_seed(cfg.seed, req.shape));
            }
            const DataMatrix data = assemble_setup(req.setup, ctx.ds, ctx.step1 ? &ctx.step1->probs : nullptr);
            const SplitIndices& split = parts.raw ? ctx.raw : ctx.windows;
            if (req.model == ModelKind::LSTM) {
                cell.metrics = run_direction_lstm(data, split, cfg.lstm, cell.seed).second;
            } else {
                cell.metrics = run_row_cell(req.model, data, split, target, cfg, cell.seed);
            }
        } catch (const Error& e) {
            throw e.with_context(cell_key(req));
        }
        cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (auto& t : out.tables) {
            if (t.step == req.step && t.shape == req.shape) t.cells[detail::table_slot(t, req)] = cell;
        }
        out.cells.push_back(cell);
        if (on_cell) on_cell(cell, out.cells.size(), requests.size());
    }

    for (const auto& [step, shape] : table_keys) {
        auto& ctx = context(shape);
        const auto labels = labels_for(ctx.ds.window_rows, step == Step::Segment ? Target::Segment : Target::Direction);
        std::vector<int> test_labels;
        for (std::size_t i : ctx.windows.test) test_labels.push_back(labels[i]);
        RandomGuessEntry rg{step, shape, 0.0,
                            derive_seed(cfg.seed, "random/" + std::string(to_string(step)) + "/" + std::string(to_string(shape)))};
        rg.accuracy = random_guess_accuracy(test_labels, step == Step::Segment ? kSegments : 2, kRandomGuessDraws, rg.seed);
        out.random_guess.push_back(rg);
    }
    return out;
}

}  // namespace intent
