#pragma once

// Subcommand implementations. Each takes a resolved RunConfig and writes its
// outputs under cfg.out; errors propagate as intent::Error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intent/cli/config.hpp"
#include "intent/pipeline/report.hpp"

namespace intent::cli {

inline std::vector<ParticipantRecord> load_data(const RunConfig& cfg) {
    if (cfg.source == DataSource::Synthetic) {
        SynthConfig synth = cfg.synth;
        if (cfg.gaze_width) synth.gaze_width = cfg.gaze_width;
        return synth_cohort(cfg.seed, cfg.participants, synth);
    }
    try {
        return load_records(cfg.data_dir, cfg.gaze_width);
    } catch (const Error& e) {
        throw e.with_context("dataset");
    }
}

inline void cmd_synth(const RunConfig& cfg) {
    if (cfg.source != DataSource::Synthetic) {
        throw Error(ErrorCode::InvalidConfig, "synth cannot read --data; it generates a cohort", std::nullopt, "synth");
    }
    const auto records = load_data(cfg);
    try {
        write_dataset(cfg.out, records);
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(ErrorCode::IoError, e.what(), std::nullopt, "synth");
    }
}

inline std::filesystem::path feature_file(const std::filesystem::path& out, TaskShape shape) {
    return out / ("features_" + std::string(to_string(shape)) + ".csv");
}

inline void cmd_features(const RunConfig& cfg) {
    const auto records = load_data(cfg);
    std::filesystem::create_directories(cfg.out);
    for (TaskShape shape : cfg.shapes) {
        ShapeDataset ds;
        try {
            ds = build_shape_dataset(records, shape, cfg.pipeline.features);
        } catch (const Error& e) {
            throw e.with_context("features/" + std::string(to_string(shape)));
        }
        csv::write_text(feature_file(cfg.out, shape), feature_csv(ds.features, ds.window_rows));
    }
}

// Everything a finished run produced; serialised into run.json so `report`
// can re-render without retraining.
struct RunRecord {
    ReportTables grid;
    std::vector<PipelineResult> two_step;
    bool reference_comparison = false;
    double wall_seconds = 0.0;
};

inline std::string render_two_step_text(std::span<const PipelineResult> results) {
    std::ostringstream out;
    out << "Two-step pipeline\n";
    for (const auto& r : results) {
        out << "  " << to_string(r.shape) << ": segment (NN on gaze) " << format_cell(r.segment) << ", direction (LSTM on "
            << to_string(r.direction_setup) << ") " << format_cell(r.direction) << '\n';
    }
    return out.str();
}

inline std::string render_run(const RunRecord& run, ReportFormat format) {
    std::string doc = render_report(run.grid, format);
    if (format == ReportFormat::Text) {
        if (!run.two_step.empty()) doc += '\n' + render_two_step_text(run.two_step);
        if (run.reference_comparison) {
            const auto claims = reference_comparison(run.grid);
            doc += '\n' + render_comparison(claims);
        }
        return doc;
    }
    std::ostringstream out;
    for (const auto& r : run.two_step) {
        out << "two_step,segment," << to_string(r.shape) << ",NN,D3," << csv::format_number(r.segment.accuracy) << ','
            << csv::format_number(r.segment.macro_f1) << ",0\n";
        out << "two_step,direction," << to_string(r.shape) << ",LSTM," << to_string(r.direction_setup) << ','
            << csv::format_number(r.direction.accuracy) << ',' << csv::format_number(r.direction.macro_f1) << ",0\n";
    }
    return doc + out.str();
}

inline nlohmann::json run_json(const RunRecord& run) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& r : run.two_step) {
        steps.push_back({{"shape", to_string(r.shape)},
                         {"direction_setup", to_string(r.direction_setup)},
                         {"root_seed", r.root_seed},
                         {"step1_seed", r.step1_seed},
                         {"step2_seed", r.step2_seed},
                         {"config_hash", r.config_hash},
                         {"step1_final_loss", r.step1_final_loss},
                         {"step2_final_loss", r.step2_final_loss},
                         {"segment", metrics_json(r.segment)},
                         {"direction", metrics_json(r.direction)}});
    }
    return {{"grid", tables_json(run.grid)},
            {"two_step", steps},
            {"reference_comparison", run.reference_comparison},
            {"wall_seconds", run.wall_seconds}};
}

inline RunRecord run_from_json(const nlohmann::json& j) {
    try {
        RunRecord run;
        run.grid = tables_from_json(j.at("grid"));
        run.reference_comparison = j.at("reference_comparison").get<bool>();
        run.wall_seconds = j.at("wall_seconds").get<double>();
        for (const auto& s : j.at("two_step")) {
            PipelineResult r;
            r.shape = parse_shape(s.at("shape").get<std::string>());
            r.direction_setup = parse_setup(s.at("direction_setup").get<std::string>());
            r.root_seed = s.at("root_seed").get<std::uint64_t>();
            r.step1_seed = s.at("step1_seed").get<std::uint64_t>();
            r.step2_seed = s.at("step2_seed").get<std::uint64_t>();
            r.config_hash = s.at("config_hash").get<std::uint64_t>();
            r.step1_final_loss = s.at("step1_final_loss").get<double>();
            r.step2_final_loss = s.at("step2_final_loss").get<double>();
            r.segment = metrics_from_json(s.at("segment"));
            r.direction = metrics_from_json(s.at("direction"));
            run.two_step.push_back(std::move(r));
        }
        return run;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SerializationError, std::string("malformed run.json: ") + e.what());
    }
}

inline void write_run_outputs(const RunRecord& run, const std::filesystem::path& out) {
    std::filesystem::create_directories(out / "confusions");
    csv::write_text(out / "report.txt", render_run(run, ReportFormat::Text));
    csv::write_text(out / "report.csv", render_run(run, ReportFormat::Csv));
    for (const auto& c : run.grid.cells) {
        csv::write_text(out / "confusions" / confusion_file_name(c.request), confusion_csv(c.metrics));
    }
    for (const auto& r : run.two_step) {
        const std::string sh(to_string(r.shape));
        csv::write_text(out / "confusions" / ("two_step_segment_" + sh + ".csv"), confusion_csv(r.segment));
        csv::write_text(out / "confusions" / ("two_step_direction_" + sh + ".csv"), confusion_csv(r.direction));
    }
    csv::write_text(out / "run.json", run_json(run).dump(2) + "\n");
}

inline RunRecord cmd_run(const RunConfig& cfg, std::ostream* log = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto records = load_data(cfg);
    RunRecord run;
    run.reference_comparison = cfg.source == DataSource::Csv;

    const auto cells = grid_cells(cfg.grid, cfg.shapes);
    const PipelineConfig base = cfg.pipeline_for(cfg.shapes.front());
    run.grid = run_grid(records, cells, base, [&](const CellResult& c, std::size_t done, std::size_t total) {
        if (log) {
            *log << '[' << done << '/' << total << "] " << cell_key(c.request) << ' ' << format_cell(c.metrics) << ' '
                 << csv::format_fixed(c.wall_seconds, 1) << "s\n";
        }
    });
    if (cfg.two_step) {
        for (TaskShape shape : cfg.shapes) {
            run.two_step.push_back(run_two_step(records, cfg.pipeline_for(shape)));
            if (log) *log << "two-step " << to_string(shape) << " done\n";
        }
    }
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_outputs(run, cfg.out);
    return run;
}

// Re-renders report.txt / report.csv from an existing run.json in cfg.out.
inline std::string cmd_report(const RunConfig& cfg) {
    const auto path = cfg.out / "run.json";
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), std::nullopt, "report");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SerializationError, e.what(), std::nullopt, "report");
    }
    const RunRecord run = run_from_json(j);
    csv::write_text(cfg.out / "report.txt", render_run(run, ReportFormat::Text));
    csv::write_text(cfg.out / "report.csv", render_run(run, ReportFormat::Csv));
    return render_run(run, ReportFormat::Text);
}

}  // namespace intent::cli
