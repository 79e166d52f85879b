#pragma once

// Run configuration and its key = value file format.
//
//   seed = 42
//   grid = "direction"
//   [lstm]
//   epochs = 30
//
// Section headers prefix the keys that follow ("lstm.epochs"); dotted keys
// work anywhere. `#` starts a comment. Unknown keys are rejected.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "intent/dataset.hpp"
#include "intent/error.hpp"
#include "intent/pipeline/grid.hpp"

namespace intent::cli {

enum class DataSource { Synthetic, Csv };

struct RunConfig {
    std::uint64_t seed = 42;
    DataSource source = DataSource::Synthetic;
    std::filesystem::path data_dir;
    std::size_t participants = 16;
    std::size_t gaze_width = 0;  // 0: inferred from gaze.csv, or the synthetic default
    SynthConfig synth;
    std::filesystem::path out = "out";
    GridSelection grid = GridSelection::All;
    std::vector<TaskShape> shapes{TaskShape::Diamond, TaskShape::Circle};
    bool two_step = true;
    PipelineConfig pipeline;

    // Pipeline settings with the root seed filled in.
    PipelineConfig pipeline_for(TaskShape shape) const {
        PipelineConfig p = pipeline;
        p.seed = seed;
        p.shape = shape;
        return p;
    }
};

inline constexpr const char* kSeedEnv = "INTENT_BENCH_SEED";

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline Error bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    return Error(ErrorCode::InvalidConfig, "bad value '" + value + "' for " + key + " (expected " + expected + ")",
                 std::nullopt, "config");
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw bad_value(key, v, "a non-negative integer");
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) throw bad_value(key, v, "a number");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw bad_value(key, v, "true or false");
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::string body = v;
    if (!body.empty() && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_integer<std::size_t>(key, trim(item)));
    if (out.empty()) throw bad_value(key, v, "a list of layer widths");
    return out;
}

}  // namespace detail

inline GridSelection parse_grid(std::string_view v) {
    if (v == "segment") return GridSelection::Segment;
    if (v == "direction") return GridSelection::Direction;
    if (v == "all") return GridSelection::All;
    throw Error(ErrorCode::InvalidConfig, "grid must be segment, direction or all, got '" + std::string(v) + "'");
}

inline std::vector<TaskShape> parse_shapes(std::string_view v) {
    if (v == "both") return {TaskShape::Diamond, TaskShape::Circle};
    if (v == "diamond") return {TaskShape::Diamond};
    if (v == "circle") return {TaskShape::Circle};
    throw Error(ErrorCode::InvalidConfig, "shape must be diamond, circle or both, got '" + std::string(v) + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

// Every accepted key and how it is applied.
inline const std::map<std::string, Setter>& config_keys() {
    using detail::parse_bool;
    using detail::parse_integer;
    using detail::parse_real;
    using S = std::size_t;
    static const std::map<std::string, Setter> keys = {
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_integer<std::uint64_t>(k, v); }},
        {"out", [](RunConfig& c, auto&, auto& v) { c.out = v; }},
        {"grid", [](RunConfig& c, auto&, auto& v) { c.grid = parse_grid(v); }},
        {"shape", [](RunConfig& c, auto&, auto& v) { c.shapes = parse_shapes(v); }},
        {"two_step", [](RunConfig& c, auto& k, auto& v) { c.two_step = parse_bool(k, v); }},
        {"two_step.setup", [](RunConfig& c, auto&, auto& v) { c.pipeline.direction_setup = parse_setup(v); }},
        {"data.source",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "synthetic") c.source = DataSource::Synthetic;
             else if (v == "csv") c.source = DataSource::Csv;
             else throw detail::bad_value(k, v, "synthetic or csv");
         }},
        {"data.dir", [](RunConfig& c, auto&, auto& v) { c.data_dir = v; }},
        {"data.participants", [](RunConfig& c, auto& k, auto& v) { c.participants = parse_integer<S>(k, v); }},
        {"data.gaze_width", [](RunConfig& c, auto& k, auto& v) { c.gaze_width = parse_integer<S>(k, v); }},
        {"split.train_fraction", [](RunConfig& c, auto& k, auto& v) { c.pipeline.split.train_fraction = parse_real(k, v); }},
        {"split.stratify",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "none") c.pipeline.split.stratify_by = Stratify::None;
             else if (v == "segment") c.pipeline.split.stratify_by = Stratify::Segment;
             else if (v == "direction") c.pipeline.split.stratify_by = Stratify::Direction;
             else throw detail::bad_value(k, v, "none, segment or direction");
         }},
        {"mlp.hidden", [](RunConfig& c, auto& k, auto& v) { c.pipeline.mlp.hidden = detail::parse_size_list(k, v); }},
        {"mlp.lr", [](RunConfig& c, auto& k, auto& v) { c.pipeline.mlp.lr = parse_real(k, v); }},
        {"mlp.epochs", [](RunConfig& c, auto& k, auto& v) { c.pipeline.mlp.epochs = parse_integer<S>(k, v); }},
        {"mlp.batch_size", [](RunConfig& c, auto& k, auto& v) { c.pipeline.mlp.batch_size = parse_integer<S>(k, v); }},
        {"mlp.l2", [](RunConfig& c, auto& k, auto& v) { c.pipeline.mlp.l2 = parse_real(k, v); }},
        {"lstm.layers", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.hidden_layers = parse_integer<S>(k, v); }},
        {"lstm.hidden", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.hidden_size = parse_integer<S>(k, v); }},
        {"lstm.lr", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.lr = parse_real(k, v); }},
        {"lstm.epochs", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.epochs = parse_integer<S>(k, v); }},
        {"lstm.batch_size", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.batch_size = parse_integer<S>(k, v); }},
        {"lstm.l2", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.l2 = parse_real(k, v); }},
        {"lstm.window", [](RunConfig& c, auto& k, auto& v) { c.pipeline.lstm.window_len = parse_integer<S>(k, v); }},
        {"lstm.mode",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "windowed") c.pipeline.lstm.mode = SequenceMode::Windowed;
             else if (v == "full-sequence") c.pipeline.lstm.mode = SequenceMode::FullSequence;
             else throw detail::bad_value(k, v, "windowed or full-sequence");
         }},
        {"knn.k", [](RunConfig& c, auto& k, auto& v) { c.pipeline.knn.k = parse_integer<S>(k, v); }},
        {"svm.lambda", [](RunConfig& c, auto& k, auto& v) { c.pipeline.svm.lambda = parse_real(k, v); }},
        {"svm.epochs", [](RunConfig& c, auto& k, auto& v) { c.pipeline.svm.epochs = parse_integer<S>(k, v); }},
        {"logreg.lr", [](RunConfig& c, auto& k, auto& v) { c.pipeline.logreg.lr = parse_real(k, v); }},
        {"logreg.epochs", [](RunConfig& c, auto& k, auto& v) { c.pipeline.logreg.epochs = parse_integer<S>(k, v); }},
        {"logreg.batch_size", [](RunConfig& c, auto& k, auto& v) { c.pipeline.logreg.batch_size = parse_integer<S>(k, v); }},
        {"features.mmav2_positive_tail",
         [](RunConfig& c, auto& k, auto& v) { c.pipeline.features.mmav2_positive_tail = parse_bool(k, v); }},
        {"features.log_epsilon", [](RunConfig& c, auto& k, auto& v) { c.pipeline.features.log_epsilon = parse_real(k, v); }},
        {"synth.samples_per_window", [](RunConfig& c, auto& k, auto& v) { c.synth.samples_per_window = parse_integer<S>(k, v); }},
        {"synth.sample_period_ms", [](RunConfig& c, auto& k, auto& v) { c.synth.sample_period_ms = parse_real(k, v); }},
        {"synth.base_resistance", [](RunConfig& c, auto& k, auto& v) { c.synth.base_resistance = parse_real(k, v); }},
        {"synth.flexion_amplitude", [](RunConfig& c, auto& k, auto& v) { c.synth.flexion_amplitude = parse_real(k, v); }},
        {"synth.noise_std", [](RunConfig& c, auto& k, auto& v) { c.synth.noise_std = parse_real(k, v); }},
        {"synth.gaze_noise_std", [](RunConfig& c, auto& k, auto& v) { c.synth.gaze_noise_std = parse_real(k, v); }},
        {"synth.amplitude_jitter", [](RunConfig& c, auto& k, auto& v) { c.synth.amplitude_jitter = parse_real(k, v); }},
        {"synth.baseline_jitter", [](RunConfig& c, auto& k, auto& v) { c.synth.baseline_jitter = parse_real(k, v); }},
    };
    return keys;
}

inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& keys = config_keys();
    const auto it = keys.find(key);
    if (it == keys.end()) throw Error(ErrorCode::UnknownKey, "unknown key '" + key + "'", std::nullopt, "config");
    it->second(cfg, key, value);
}

// Applies a config document on top of `cfg`. Returns the keys it set.
inline std::vector<std::string> apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source = "config") {
    std::vector<std::string> seen;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        std::string line = raw;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::InvalidConfig, "unterminated section header", line_no, where);
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "expected key = value", line_no, where);
        std::string key = detail::trim(std::string_view(line).substr(0, eq));
        std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (!section.empty()) key = section + "." + key;
        try {
            set_key(cfg, key, value);
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), line_no, where);
        }
        seen.push_back(key);
    }
    return seen;
}

inline std::vector<std::string> apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + path.string(), std::nullopt, "config");
    std::stringstream ss;
    ss << in.rdbuf();
    return apply_config_text(cfg, ss.str(), path.filename().string());
}

// Command-line overrides; unset fields keep the config file value.
struct Overrides {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    bool synthetic = false;
    std::optional<std::filesystem::path> data;
    std::optional<std::string> grid;
    std::optional<std::string> shape;
};

// Seed precedence: --seed, then the config file, then INTENT_BENCH_SEED,
// then the built-in default.
inline RunConfig resolve_config(const Overrides& o, const char* env_seed = std::getenv(kSeedEnv)) {
    RunConfig cfg;
    bool seed_from_file = false;
    bool source_from_file = false;
    if (o.config) {
        for (const auto& k : apply_config_file(cfg, *o.config)) {
            seed_from_file |= k == "seed";
            source_from_file |= k == "data.source" || k == "data.dir";
        }
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    } else if (!seed_from_file && env_seed && *env_seed) {
        cfg.seed = detail::parse_integer<std::uint64_t>(kSeedEnv, env_seed);
    }
    if (o.synthetic && o.data) {
        throw Error(ErrorCode::InvalidConfig, "--synthetic and --data are mutually exclusive", std::nullopt, "config");
    }
    if (o.synthetic) {
        cfg.source = DataSource::Synthetic;
    } else if (o.data) {
        cfg.source = DataSource::Csv;
        cfg.data_dir = *o.data;
    } else if (source_from_file && cfg.source == DataSource::Csv && cfg.data_dir.empty()) {
        throw Error(ErrorCode::InvalidConfig, "data.source = csv needs data.dir", std::nullopt, "config");
    }
    if (o.out) cfg.out = *o.out;
    if (o.grid) cfg.grid = parse_grid(*o.grid);
    if (o.shape) cfg.shapes = parse_shapes(*o.shape);

    if (cfg.source == DataSource::Synthetic) {
        cfg.synth.gaze_width = cfg.gaze_width ? cfg.gaze_width : kDefaultGazeWidth;
        validate(cfg.synth);
        if (cfg.participants < 2) {
            throw Error(ErrorCode::InvalidConfig, "data.participants must be at least 2", std::nullopt, "config");
        }
    }
    return cfg;
}

}  // namespace intent::cli
