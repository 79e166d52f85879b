#pragma once

// Rendering of grid results: paper-style text tables, a flat CSV, per-cell
// confusion matrices, the run.json provenance sidecar and the ordering-claim
// comparison against the published reference numbers.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intent/csv.hpp"
#include "intent/pipeline/grid.hpp"

namespace intent {

enum class ReportFormat { Text, Csv };

// "AA.AA [0.FFF]"
inline std::string format_cell(const Metrics& m) {
    return csv::format_fixed(m.accuracy, 2) + " [" + csv::format_fixed(m.macro_f1, 3) + "]";
}

inline constexpr std::string_view kSplitCaveat =
    "Note: train/test partitions are drawn per sample, so windows of one participant appear on both sides\n"
    "of the split. Scores measure within-participant generalisation, not transfer to unseen people.\n";

namespace detail {

inline void check_complete(const ReportTables& t) {
    for (const auto& table : t.tables) {
        for (std::size_t i = 0; i < table.cells.size(); ++i) {
            if (!table.cells[i]) {
                const std::size_t r = i / table.col_labels.size();
                const std::size_t c = i % table.col_labels.size();
                throw Error(ErrorCode::IncompleteTable,
                            "missing cell " + table.row_labels[r] + "/" + table.col_labels[c] + " in '" + table.title() + "'");
            }
        }
    }
}

inline std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

inline std::string render_text(const ReportTables& t) {
    std::ostringstream out;
    out << "Motion intention benchmark report\n";
    out << "root seed " << t.root_seed << ", config hash " << t.config_hash << "\n";
    out << "Cells: accuracy (%) [macro F1]; the best cell of each table is marked **like this**.\n";
    out << kSplitCaveat << '\n';

    for (const auto& table : t.tables) {
        const auto best = table.best();
        std::vector<std::vector<std::string>> grid;
        grid.push_back({table.step == Step::Segment ? "model" : "setup"});
        for (const auto& c : table.col_labels) grid[0].push_back(c);
        for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
            std::vector<std::string> line{table.row_labels[r]};
            for (std::size_t c = 0; c < table.col_labels.size(); ++c) {
                const std::size_t i = r * table.col_labels.size() + c;
                std::string s = format_cell(table.cells[i]->metrics);
                if (best && *best == i) s = "**" + s + "**";
                line.push_back(std::move(s));
            }
            grid.push_back(std::move(line));
        }
        std::vector<std::size_t> widths(grid[0].size(), 0);
        for (const auto& line : grid) {
            for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
        }
        out << table.title() << '\n';
        for (const auto& line : grid) {
            std::string row;
            for (std::size_t c = 0; c < line.size(); ++c) row += (c ? " | " : "") + pad(line[c], widths[c]);
            while (!row.empty() && row.back() == ' ') row.pop_back();
            out << row << '\n';
        }
        out << '\n';
    }

    if (!t.random_guess.empty()) {
        out << "Random guess\n";
        for (const auto& rg : t.random_guess) {
            out << pad(std::string(to_string(rg.step)) + " " + std::string(to_string(rg.shape)), 18)
                << csv::format_fixed(rg.accuracy, 2) << '\n';
        }
    }
    return out.str();
}

inline std::string render_csv(const ReportTables& t) {
    std::ostringstream out;
    out << "table,step,shape,model,setup,accuracy,macro_f1,best\n";
    for (std::size_t ti = 0; ti < t.tables.size(); ++ti) {
        const auto& table = t.tables[ti];
        const auto best = table.best();
        for (std::size_t i = 0; i < table.cells.size(); ++i) {
            const CellResult& c = *table.cells[i];
            out << ti << ',' << to_string(c.request.step) << ',' << to_string(c.request.shape) << ','
                << to_string(c.request.model) << ',' << to_string(c.request.setup) << ','
                << csv::format_number(c.metrics.accuracy) << ',' << csv::format_number(c.metrics.macro_f1) << ','
                << (best && *best == i ? 1 : 0) << '\n';
        }
    }
    for (const auto& rg : t.random_guess) {
        out << "random," << to_string(rg.step) << ',' << to_string(rg.shape) << ",RandomGuess,-,"
            << csv::format_number(rg.accuracy) << ",,0\n";
    }
    return out.str();
}

}  // namespace detail

inline std::string render_report(const ReportTables& tables, ReportFormat format) {
    detail::check_complete(tables);
    return format == ReportFormat::Text ? detail::render_text(tables) : detail::render_csv(tables);
}

inline std::string confusion_csv(const Metrics& m) {
    std::ostringstream out;
    out << "truth";
    for (std::size_t c = 0; c < m.confusion.size(); ++c) out << ",pred_" << c;
    out << '\n';
    for (std::size_t r = 0; r < m.confusion.size(); ++r) {
        out << r;
        for (std::size_t v : m.confusion[r]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

inline std::string confusion_file_name(const CellRequest& c) {
    std::string key = cell_key(c);
    std::replace(key.begin(), key.end(), '/', '_');
    return key + ".csv";
}

// Cell results round-trip through JSON so `report` can re-render a finished run.
inline nlohmann::json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"confusion", m.confusion}};
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    m.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    return m;
}

inline ModelKind parse_model_kind(std::string_view s) {
    for (ModelKind m : {ModelKind::NN, ModelKind::LSTM, ModelKind::KNN, ModelKind::SVM, ModelKind::LR}) {
        if (to_string(m) == s) return m;
    }
    throw Error(ErrorCode::SerializationError, "unknown model kind '" + std::string(s) + "'");
}

inline Step parse_step(std::string_view s) {
    if (s == "segment") return Step::Segment;
    if (s == "direction") return Step::Direction;
    throw Error(ErrorCode::SerializationError, "unknown step '" + std::string(s) + "'");
}

inline nlohmann::json tables_json(const ReportTables& t) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : t.cells) {
        cells.push_back({{"key", cell_key(c.request)},
                         {"step", to_string(c.request.step)},
                         {"model", to_string(c.request.model)},
                         {"setup", to_string(c.request.setup)},
                         {"shape", to_string(c.request.shape)},
                         {"seed", c.seed},
                         {"wall_seconds", c.wall_seconds},
                         {"metrics", metrics_json(c.metrics)}});
    }
    nlohmann::json random = nlohmann::json::array();
    for (const auto& rg : t.random_guess) {
        random.push_back({{"step", to_string(rg.step)},
                          {"shape", to_string(rg.shape)},
                          {"seed", rg.seed},
                          {"accuracy", rg.accuracy}});
    }
    return {{"root_seed", t.root_seed}, {"config_hash", t.config_hash}, {"cells", cells}, {"random_guess", random}};
}

inline ReportTables tables_from_json(const nlohmann::json& j) {
    try {
        ReportTables t;
        t.root_seed = j.at("root_seed").get<std::uint64_t>();
        t.config_hash = j.at("config_hash").get<std::uint64_t>();
        std::vector<std::pair<Step, TaskShape>> keys;
        for (const auto& c : j.at("cells")) {
            CellResult cell;
            cell.request = {parse_model_kind(c.at("model").get<std::string>()), parse_setup(c.at("setup").get<std::string>()),
                            parse_shape(c.at("shape").get<std::string>()), parse_step(c.at("step").get<std::string>())};
            cell.seed = c.at("seed").get<std::uint64_t>();
            cell.wall_seconds = c.at("wall_seconds").get<double>();
            cell.metrics = metrics_from_json(c.at("metrics"));
            if (!is_valid(cell.request)) throw Error(ErrorCode::InvalidCell, "invalid cell " + cell_key(cell.request));
            const std::pair key{cell.request.step, cell.request.shape};
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
            t.cells.push_back(std::move(cell));
        }
        std::stable_sort(keys.begin(), keys.end());
        for (const auto& [step, shape] : keys) t.tables.push_back(detail::empty_table(step, shape));
        for (const auto& cell : t.cells) {
            for (auto& table : t.tables) {
                if (table.step == cell.request.step && table.shape == cell.request.shape) {
                    table.cells[detail::table_slot(table, cell.request)] = cell;
                }
            }
        }
        for (const auto& r : j.at("random_guess")) {
            t.random_guess.push_back({parse_step(r.at("step").get<std::string>()), parse_shape(r.at("shape").get<std::string>()),
                                      r.at("accuracy").get<double>(), r.at("seed").get<std::uint64_t>()});
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SerializationError, std::string("malformed run record: ") + e.what());
    }
}

// Ordering claims from the published study, checked against a finished grid.
// Purely informational: a failed claim is reported, never raised.
struct ReferenceClaim {
    std::string description;
    std::optional<bool> holds;  // empty when the needed cells were not run
    std::string detail;
};

inline constexpr double kReferenceD2GainDiamond = 34.6;

inline std::vector<ReferenceClaim> reference_comparison(const ReportTables& t) {
    auto find = [&](Step step, ModelKind model, SetupId setup, TaskShape shape) -> const CellResult* {
        for (const auto& c : t.cells) {
            if (c.request == CellRequest{model, setup, shape, step}) return &c;
        }
        return nullptr;
    };
    std::vector<ReferenceClaim> out;
    for (TaskShape shape : {TaskShape::Diamond, TaskShape::Circle}) {
        const std::string sh(to_string(shape));
        ReferenceClaim nn{"NN-D3 beats NN-D1 on segments (" + sh + ")", std::nullopt, ""};
        const auto* d3 = find(Step::Segment, ModelKind::NN, SetupId::D3, shape);
        const auto* d1 = find(Step::Segment, ModelKind::NN, SetupId::D1, shape);
        if (d3 && d1) {
            nn.holds = d3->metrics.accuracy > d1->metrics.accuracy;
            nn.detail = csv::format_fixed(d3->metrics.accuracy, 2) + " vs " + csv::format_fixed(d1->metrics.accuracy, 2);
        }
        out.push_back(nn);

        ReferenceClaim best{"LSTM-D6 is the best direction cell (" + sh + ")", std::nullopt, ""};
        for (const auto& table : t.tables) {
            if (table.step != Step::Direction || table.shape != shape) continue;
            const auto b = table.best();
            const auto* lstm = find(Step::Direction, ModelKind::LSTM, SetupId::D6, shape);
            if (b && lstm) {
                const auto& bc = *table.cells[*b];
                best.holds = bc.metrics.accuracy <= lstm->metrics.accuracy;
                best.detail = "LSTM-D6 " + csv::format_fixed(lstm->metrics.accuracy, 2) + ", best " +
                              std::string(to_string(bc.request.model)) + "-" + to_string(bc.request.setup) + " " +
                              csv::format_fixed(bc.metrics.accuracy, 2);
            }
        }
        out.push_back(best);
    }
    ReferenceClaim gap{"LSTM D2 minus D1 on diamond is about " + csv::format_fixed(kReferenceD2GainDiamond, 1) + " points",
                       std::nullopt, ""};
    const auto* d2 = find(Step::Direction, ModelKind::LSTM, SetupId::D2, TaskShape::Diamond);
    const auto* d1 = find(Step::Direction, ModelKind::LSTM, SetupId::D1, TaskShape::Diamond);
    if (d2 && d1) {
        const double g = d2->metrics.accuracy - d1->metrics.accuracy;
        gap.holds = std::abs(g - kReferenceD2GainDiamond) <= 10.0;
        gap.detail = "observed " + csv::format_fixed(g, 2);
    }
    out.push_back(gap);
    return out;
}

inline std::string render_comparison(std::span<const ReferenceClaim> claims) {
    std::ostringstream out;
    out << "Reference comparison (informational)\n";
    for (const auto& c : claims) {
        out << (c.holds ? (*c.holds ? "  agrees   " : "  deviates ") : "  skipped  ") << c.description;
        if (!c.detail.empty()) out << ": " << c.detail;
        out << '\n';
    }
    return out.str();
}

}  // namespace intent
