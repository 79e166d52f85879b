#pragma once

// Recording types, hit-point segmentation, labels, the synthetic cohort
// generator and CSV ingestion/export for the four dataset files.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intent/csv.hpp"
#include "intent/error.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

inline constexpr int kHitsPerTask = 40;
inline constexpr int kWindowsPerTask = kHitsPerTask - 1;
inline constexpr int kSegments = 4;
inline constexpr int kHitsPerSegment = kHitsPerTask / kSegments;
inline constexpr std::size_t kDefaultGazeWidth = 24;

enum class TaskShape { Diamond, Circle };
enum class Direction { Clockwise, Counterclockwise };

inline constexpr std::string_view to_string(TaskShape s) { return s == TaskShape::Diamond ? "diamond" : "circle"; }
inline constexpr std::string_view to_string(Direction d) { return d == Direction::Clockwise ? "cw" : "ccw"; }

inline TaskShape parse_shape(std::string_view text) {
    if (text == "diamond") return TaskShape::Diamond;
    if (text == "circle") return TaskShape::Circle;
    throw Error(ErrorCode::NonNumericValue, "unknown shape '" + std::string(text) + "'");
}

inline Direction parse_direction(std::string_view text) {
    if (text == "cw") return Direction::Clockwise;
    if (text == "ccw") return Direction::Counterclockwise;
    throw Error(ErrorCode::NonNumericValue, "unknown direction '" + std::string(text) + "' (expected cw or ccw)");
}

// Direction as a class index: cw = 0, ccw = 1.
inline constexpr int direction_class(Direction d) { return d == Direction::Clockwise ? 0 : 1; }

struct HitEvent {
    int hit_index = 0;  // 1..40
    double timestamp_ms = 0.0;
};

struct ResistanceSample {
    double timestamp_ms = 0.0;
    double resistance_ohm = 0.0;
};

struct ResistanceTrace {
    std::string participant_id;
    TaskShape shape = TaskShape::Diamond;
    std::vector<ResistanceSample> samples;
};

// Samples recorded between two consecutive hit points.
struct SegmentWindow {
    std::vector<double> values;
    int source_hit = 0;
    int dest_hit = 0;
};

struct GazeRow {
    int hit_index = 0;
    std::vector<double> features;
};

struct SegmentLabel {
    int value = 0;
    auto operator<=>(const SegmentLabel&) const = default;
};

struct ParticipantRecord {
    std::string participant_id;
    TaskShape shape = TaskShape::Diamond;
    Direction direction = Direction::Clockwise;
    std::vector<HitEvent> hits;        // 40
    ResistanceTrace trace;
    std::vector<SegmentWindow> windows;  // 39
    std::vector<GazeRow> gaze;           // 40
};

// Four contiguous arcs of ten hit points: 1-10, 11-20, 21-30, 31-40.
inline SegmentLabel assign_segment_label(int hit_index) {
    if (hit_index < 1 || hit_index > kHitsPerTask) {
        throw Error(ErrorCode::OutOfRange, "hit index " + std::to_string(hit_index) + " outside 1..40",
                    static_cast<std::size_t>(std::max(hit_index, 0)));
    }
    return SegmentLabel{(hit_index - 1) / kHitsPerSegment};
}

inline void validate_hits(std::span<const HitEvent> events) {
    if (events.size() != static_cast<std::size_t>(kHitsPerTask)) {
        throw Error(ErrorCode::InvalidHits, "expected 40 hit events, got " + std::to_string(events.size()));
    }
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (events[k].hit_index != static_cast<int>(k) + 1) {
            throw Error(ErrorCode::InvalidHits, "hit events must be numbered 1..40 in order", k + 1);
        }
        if (events[k].timestamp_ms < 0.0) {
            throw Error(ErrorCode::InvalidHits, "negative hit timestamp", k + 1);
        }
        if (k > 0 && !(events[k].timestamp_ms > events[k - 1].timestamp_ms)) {
            throw Error(ErrorCode::NonMonotonicTimestamp, "hit timestamps must be strictly increasing", k + 1);
        }
    }
}

// Window k holds the samples with t_k <= t < t_{k+1}.
inline std::vector<SegmentWindow> segment_trace(const ResistanceTrace& trace, std::span<const HitEvent> events) {
    validate_hits(events);
    std::vector<SegmentWindow> windows;
    windows.reserve(kWindowsPerTask);
    const auto& s = trace.samples;
    auto cursor = std::lower_bound(s.begin(), s.end(), events.front().timestamp_ms,
                                   [](const ResistanceSample& a, double t) { return a.timestamp_ms < t; });
    for (int k = 1; k < kHitsPerTask; ++k) {
        const double end_t = events[static_cast<std::size_t>(k)].timestamp_ms;
        SegmentWindow w;
        w.source_hit = k;
        w.dest_hit = k + 1;
        while (cursor != s.end() && cursor->timestamp_ms < end_t) {
            w.values.push_back(cursor->resistance_ohm);
            ++cursor;
        }
        if (w.values.size() < 2) {
            throw Error(ErrorCode::EmptyWindow,
                        "window " + std::to_string(k) + " has " + std::to_string(w.values.size()) + " sample(s), need 2",
                        static_cast<std::size_t>(k), trace.participant_id);
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

// Resistance at each hit: the first sample at or after the hit instant
// (the last sample if the trace ends before it).
inline std::vector<double> hit_resistance(const ResistanceTrace& trace, std::span<const HitEvent> events) {
    if (trace.samples.empty()) throw Error(ErrorCode::EmptyWindow, "empty trace", std::nullopt, trace.participant_id);
    std::vector<double> out;
    out.reserve(events.size());
    for (const HitEvent& e : events) {
        auto it = std::lower_bound(trace.samples.begin(), trace.samples.end(), e.timestamp_ms,
                                   [](const ResistanceSample& a, double t) { return a.timestamp_ms < t; });
        if (it == trace.samples.end()) --it;
        out.push_back(it->resistance_ohm);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic cohort

struct SynthConfig {
    std::size_t samples_per_window = 20;
    double sample_period_ms = 10.0;
    double base_resistance = 1000.0;   // ohms
    double flexion_amplitude = 200.0;  // ohms
    double noise_std = 4.0;            // ohms, per sample
    std::size_t gaze_width = kDefaultGazeWidth;
    double gaze_noise_std = 0.25;
    // Per-participant variation: amplitude scale in 1 +/- amplitude_jitter,
    // baseline offset in +/- baseline_jitter * amplitude.
    double amplitude_jitter = 0.15;
    double baseline_jitter = 0.1;
};

inline void validate(const SynthConfig& cfg) {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what, std::nullopt, "synth"); };
    if (cfg.samples_per_window < 2) bad("samples_per_window must be >= 2");
    if (!(cfg.sample_period_ms > 0.0)) bad("sample_period_ms must be positive");
    if (!(cfg.base_resistance > 0.0)) bad("base_resistance must be positive");
    if (!(cfg.flexion_amplitude > 0.0)) bad("flexion_amplitude must be positive");
    if (!(cfg.noise_std >= 0.0)) bad("noise_std must be non-negative");
    if (!(cfg.gaze_noise_std >= 0.0)) bad("gaze_noise_std must be non-negative");
    if (cfg.gaze_width < static_cast<std::size_t>(kSegments)) bad("gaze_width must be >= 4");
    if (!(cfg.amplitude_jitter >= 0.0 && cfg.amplitude_jitter < 1.0)) bad("amplitude_jitter must be in [0, 1)");
    if (!(cfg.baseline_jitter >= 0.0)) bad("baseline_jitter must be non-negative");
}

// Elbow flexion profile over traversal progress u in [0, 40): one period per
// lap. The circle is sinusoidal, the diamond piecewise linear between corners.
inline double flexion_profile(TaskShape shape, double u) {
    const double phase = u / static_cast<double>(kHitsPerTask);
    if (shape == TaskShape::Circle) return std::sin(2.0 * std::numbers::pi * phase);
    const double p = phase - std::floor(phase);
    if (p < 0.25) return 4.0 * p;
    if (p < 0.75) return 2.0 - 4.0 * p;
    return 4.0 * p - 4.0;
}

// One participant-task. Counterclockwise traversal visits the clockwise
// profile in reverse sample order, so with zero noise the two directions are
// exact mirror images of each other.
inline ParticipantRecord synth_participant(std::uint64_t seed, TaskShape shape, Direction direction,
                                           const SynthConfig& cfg, std::string participant_id = "P00") {
    validate(cfg);
    Rng rng(seed);
    const double amplitude = cfg.flexion_amplitude * rng.uniform(1.0 - cfg.amplitude_jitter, 1.0 + cfg.amplitude_jitter);
    const double baseline = cfg.base_resistance + cfg.flexion_amplitude * rng.uniform(-cfg.baseline_jitter, cfg.baseline_jitter);

    const std::size_t n = cfg.samples_per_window;
    const std::size_t total = n * static_cast<std::size_t>(kWindowsPerTask);

    std::vector<double> clean(total);
    for (std::size_t i = 0; i < total; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        clean[i] = baseline + amplitude * flexion_profile(shape, u);
    }
    const bool reversed = direction == Direction::Counterclockwise;
    const double final_clean =
        baseline + amplitude * flexion_profile(shape, reversed ? 0.0 : static_cast<double>(kWindowsPerTask));

    ParticipantRecord rec;
    rec.participant_id = std::move(participant_id);
    rec.shape = shape;
    rec.direction = direction;
    rec.trace.participant_id = rec.participant_id;
    rec.trace.shape = shape;
    rec.trace.samples.reserve(total + 1);
    for (std::size_t i = 0; i < total; ++i) {
        const double v = reversed ? clean[total - 1 - i] : clean[i];
        const double noise = cfg.noise_std > 0.0 ? rng.normal(0.0, cfg.noise_std) : 0.0;
        rec.trace.samples.push_back({static_cast<double>(i) * cfg.sample_period_ms, v + noise});
    }
    {
        const double noise = cfg.noise_std > 0.0 ? rng.normal(0.0, cfg.noise_std) : 0.0;
        rec.trace.samples.push_back({static_cast<double>(total) * cfg.sample_period_ms, final_clean + noise});
    }

    rec.hits.reserve(kHitsPerTask);
    for (int k = 1; k <= kHitsPerTask; ++k) {
        rec.hits.push_back({k, static_cast<double>(static_cast<std::size_t>(k - 1) * n) * cfg.sample_period_ms});
    }
    rec.windows = segment_trace(rec.trace, rec.hits);

    // Gaze: noisy one-hot of the segment reached in the first four columns,
    // participant-specific distractors in the rest.
    const std::size_t g = cfg.gaze_width;
    std::vector<double> offsets(g, 0.0);
    for (std::size_t j = kSegments; j < g; ++j) offsets[j] = rng.normal(0.0, 0.5);
    rec.gaze.reserve(kHitsPerTask);
    for (int k = 1; k <= kHitsPerTask; ++k) {
        GazeRow row;
        row.hit_index = k;
        row.features.resize(g);
        const int segment = assign_segment_label(k).value;
        for (std::size_t j = 0; j < g; ++j) {
            if (j < static_cast<std::size_t>(kSegments)) {
                const double hot = static_cast<int>(j) == segment ? 1.0 : 0.0;
                row.features[j] = hot + (cfg.gaze_noise_std > 0.0 ? rng.normal(0.0, cfg.gaze_noise_std) : 0.0);
            } else {
                row.features[j] = offsets[j] + rng.normal(0.0, 1.0);
            }
        }
        rec.gaze.push_back(std::move(row));
    }
    return rec;
}

inline std::string participant_name(std::size_t index) {
    std::string id = std::to_string(index + 1);
    if (id.size() < 2) id.insert(0, 1, '0');
    return "P" + id;
}

// Cohort of `participants`, alternating cw/ccw (equal groups for even
// counts), each performing both shapes. Records are ordered by shape then
// participant.
inline std::vector<ParticipantRecord> synth_cohort(std::uint64_t seed, std::size_t participants, const SynthConfig& cfg) {
    if (participants == 0) throw Error(ErrorCode::InvalidConfig, "participants must be positive", std::nullopt, "synth");
    std::vector<ParticipantRecord> out;
    for (TaskShape shape : {TaskShape::Diamond, TaskShape::Circle}) {
        for (std::size_t p = 0; p < participants; ++p) {
            const std::string id = participant_name(p);
            const Direction dir = p % 2 == 0 ? Direction::Clockwise : Direction::Counterclockwise;
            const std::uint64_t s = derive_seed(seed, "participant/" + id + "/" + std::string(to_string(shape)));
            out.push_back(synth_participant(s, shape, dir, cfg, id));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV ingestion

using TaskKey = std::pair<std::string, TaskShape>;

inline std::vector<ResistanceTrace> load_resistance_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    const std::size_t c_pid = t.column("participant_id");
    const std::size_t c_shape = t.column("shape");
    const std::size_t c_time = t.column("timestamp_ms");
    const std::size_t c_res = t.column("resistance_ohm");
    const std::string file = path.filename().string();

    std::vector<ResistanceTrace> traces;
    std::map<TaskKey, std::size_t> slot;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t rowno = r + 1;
        if (row.size() != t.header.size()) {
            throw Error(ErrorCode::MissingColumn, "row " + std::to_string(rowno) + " has " + std::to_string(row.size()) +
                                                      " fields, header has " + std::to_string(t.header.size()),
                        rowno, file);
        }
        TaskShape shape;
        try {
            shape = parse_shape(row[c_shape]);
        } catch (const Error& e) {
            throw Error(ErrorCode::NonNumericValue, std::string(e.what()) + " at row " + std::to_string(rowno), rowno, file);
        }
        const double ts = csv::parse_number(row[c_time], rowno, "timestamp_ms", path);
        const double ohm = csv::parse_number(row[c_res], rowno, "resistance_ohm", path);
        const TaskKey key{row[c_pid], shape};
        auto [it, inserted] = slot.try_emplace(key, traces.size());
        if (inserted) traces.push_back(ResistanceTrace{key.first, shape, {}});
        auto& samples = traces[it->second].samples;
        if (!samples.empty() && ts < samples.back().timestamp_ms) {
            throw Error(ErrorCode::NonMonotonicTimestamp,
                        "timestamp decreases at row " + std::to_string(rowno) + " for " + key.first, rowno, file);
        }
        samples.push_back({ts, ohm});
    }
    return traces;
}

inline std::map<TaskKey, std::vector<HitEvent>> load_hits_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    const std::size_t c_pid = t.column("participant_id");
    const std::size_t c_shape = t.column("shape");
    const std::size_t c_hit = t.column("hit_index");
    const std::size_t c_time = t.column("timestamp_ms");
    const std::string file = path.filename().string();

    std::map<TaskKey, std::vector<HitEvent>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t rowno = r + 1;
        if (row.size() != t.header.size()) {
            throw Error(ErrorCode::MissingColumn, "row " + std::to_string(rowno) + " field count differs from header",
                        rowno, file);
        }
        const double hit = csv::parse_number(row[c_hit], rowno, "hit_index", path);
        if (hit != std::floor(hit)) {
            throw Error(ErrorCode::NonNumericValue, "hit_index must be an integer at row " + std::to_string(rowno), rowno, file);
        }
        const double ts = csv::parse_number(row[c_time], rowno, "timestamp_ms", path);
        out[{row[c_pid], parse_shape(row[c_shape])}].push_back({static_cast<int>(hit), ts});
    }
    for (auto& [key, events] : out) {
        std::sort(events.begin(), events.end(), [](const HitEvent& a, const HitEvent& b) { return a.hit_index < b.hit_index; });
        try {
            validate_hits(events);
        } catch (const Error& e) {
            throw e.with_context(file + ":" + key.first + "/" + std::string(to_string(key.second)));
        }
    }
    return out;
}

// Gaze table with columns g1..gG. `expected_width` = 0 accepts the header's
// width; otherwise the header must match it.
inline std::map<TaskKey, std::vector<GazeRow>> load_gaze_csv(const std::filesystem::path& path,
                                                             std::size_t expected_width = 0) {
    const csv::Table t = csv::read(path);
    const std::size_t c_pid = t.column("participant_id");
    const std::size_t c_shape = t.column("shape");
    const std::size_t c_hit = t.column("hit_index");
    const std::string file = path.filename().string();

    std::vector<std::size_t> gcols;
    for (std::size_t j = 1;; ++j) {
        const std::string name = "g" + std::to_string(j);
        auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) break;
        gcols.push_back(static_cast<std::size_t>(it - t.header.begin()));
    }
    if (gcols.empty()) throw Error(ErrorCode::MissingColumn, "no gaze columns g1..gG", std::nullopt, file);
    if (expected_width != 0 && gcols.size() != expected_width) {
        throw Error(ErrorCode::MixedGazeWidth,
                    "gaze width " + std::to_string(gcols.size()) + " differs from configured " + std::to_string(expected_width),
                    std::nullopt, file);
    }

    std::map<TaskKey, std::vector<GazeRow>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t rowno = r + 1;
        if (row.size() != t.header.size()) {
            throw Error(ErrorCode::MixedGazeWidth,
                        "row " + std::to_string(rowno) + " has " + std::to_string(row.size()) + " fields, header has " +
                            std::to_string(t.header.size()),
                        rowno, file);
        }
        GazeRow g;
        const double hit = csv::parse_number(row[c_hit], rowno, "hit_index", path);
        g.hit_index = static_cast<int>(hit);
        g.features.reserve(gcols.size());
        for (std::size_t c : gcols) g.features.push_back(csv::parse_number(row[c], rowno, t.header[c], path));
        out[{row[c_pid], parse_shape(row[c_shape])}].push_back(std::move(g));
    }
    for (auto& [key, rows] : out) {
        std::sort(rows.begin(), rows.end(), [](const GazeRow& a, const GazeRow& b) { return a.hit_index < b.hit_index; });
    }
    return out;
}

inline std::map<std::string, Direction> load_participants_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    const std::size_t c_pid = t.column("participant_id");
    const std::size_t c_dir = t.column("direction");
    std::map<std::string, Direction> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row.size() != t.header.size()) {
            throw Error(ErrorCode::MissingColumn, "row " + std::to_string(r + 1) + " field count differs from header", r + 1,
                        path.filename().string());
        }
        try {
            out[row[c_pid]] = parse_direction(row[c_dir]);
        } catch (const Error& e) {
            throw Error(ErrorCode::NonNumericValue, std::string(e.what()) + " at row " + std::to_string(r + 1), r + 1,
                        path.filename().string());
        }
    }
    return out;
}

// Loads resistance.csv, hits.csv, gaze.csv and participants.csv from `dir`
// and assembles one record per (participant, shape) present in all files.
inline std::vector<ParticipantRecord> load_records(const std::filesystem::path& dir, std::size_t gaze_width = 0) {
    for (const char* name : {"resistance.csv", "hits.csv", "gaze.csv", "participants.csv"}) {
        if (!std::filesystem::exists(dir / name)) {
            throw Error(ErrorCode::IoError, "missing file " + (dir / name).string(), std::nullopt, name);
        }
    }
    const auto directions = load_participants_csv(dir / "participants.csv");
    const auto hits = load_hits_csv(dir / "hits.csv");
    const auto gaze = load_gaze_csv(dir / "gaze.csv", gaze_width);
    auto traces = load_resistance_csv(dir / "resistance.csv");
    std::sort(traces.begin(), traces.end(), [](const ResistanceTrace& a, const ResistanceTrace& b) {
        return std::pair(a.shape, a.participant_id) < std::pair(b.shape, b.participant_id);
    });

    std::vector<ParticipantRecord> out;
    for (auto& trace : traces) {
        const TaskKey key{trace.participant_id, trace.shape};
        const std::string where = trace.participant_id + "/" + std::string(to_string(trace.shape));
        auto dir_it = directions.find(trace.participant_id);
        if (dir_it == directions.end()) {
            throw Error(ErrorCode::MissingPart, "participant " + trace.participant_id + " missing from participants.csv");
        }
        auto hit_it = hits.find(key);
        if (hit_it == hits.end()) throw Error(ErrorCode::MissingPart, "no hit events for " + where, std::nullopt, "hits.csv");
        auto gaze_it = gaze.find(key);
        if (gaze_it == gaze.end()) throw Error(ErrorCode::MissingPart, "no gaze rows for " + where, std::nullopt, "gaze.csv");
        if (gaze_it->second.size() != static_cast<std::size_t>(kHitsPerTask)) {
            throw Error(ErrorCode::InvalidHits, "expected 40 gaze rows for " + where, std::nullopt, "gaze.csv");
        }
        for (std::size_t k = 0; k < gaze_it->second.size(); ++k) {
            if (gaze_it->second[k].hit_index != static_cast<int>(k) + 1) {
                throw Error(ErrorCode::InvalidHits, "gaze rows must cover hit indices 1..40 for " + where, k + 1, "gaze.csv");
            }
        }

        ParticipantRecord rec;
        rec.participant_id = trace.participant_id;
        rec.shape = trace.shape;
        rec.direction = dir_it->second;
        rec.hits = hit_it->second;
        rec.gaze = gaze_it->second;
        try {
            rec.windows = segment_trace(trace, rec.hits);
        } catch (const Error& e) {
            throw e.with_context("resistance.csv:" + where);
        }
        rec.trace = std::move(trace);
        out.push_back(std::move(rec));
    }
    return out;
}

// Writes the four dataset files for `records`.
inline void write_dataset(const std::filesystem::path& dir, std::span<const ParticipantRecord> records) {
    std::filesystem::create_directories(dir);
    std::ostringstream res, hits, gaze, parts;
    res << "participant_id,shape,timestamp_ms,resistance_ohm\n";
    hits << "participant_id,shape,hit_index,timestamp_ms\n";
    parts << "participant_id,direction\n";
    const std::size_t g = records.empty() || records.front().gaze.empty() ? 0 : records.front().gaze.front().features.size();
    gaze << "participant_id,shape,hit_index";
    for (std::size_t j = 1; j <= g; ++j) gaze << ",g" << j;
    gaze << '\n';

    std::map<std::string, Direction> directions;
    for (const auto& rec : records) {
        const std::string_view shape = to_string(rec.shape);
        directions.emplace(rec.participant_id, rec.direction);
        for (const auto& s : rec.trace.samples) {
            res << rec.participant_id << ',' << shape << ',' << csv::format_number(s.timestamp_ms) << ','
                << csv::format_fixed(s.resistance_ohm, 6) << '\n';
        }
        for (const auto& h : rec.hits) {
            hits << rec.participant_id << ',' << shape << ',' << h.hit_index << ',' << csv::format_number(h.timestamp_ms) << '\n';
        }
        for (const auto& row : rec.gaze) {
            gaze << rec.participant_id << ',' << shape << ',' << row.hit_index;
            for (double v : row.features) gaze << ',' << csv::format_fixed(v, 6);
            gaze << '\n';
        }
    }
    for (const auto& [id, d] : directions) parts << id << ',' << to_string(d) << '\n';

    csv::write_text(dir / "resistance.csv", res.str());
    csv::write_text(dir / "hits.csv", hits.str());
    csv::write_text(dir / "gaze.csv", gaze.str());
    csv::write_text(dir / "participants.csv", parts.str());
}

}  // namespace intent
