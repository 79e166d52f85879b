#pragma once

// Time-domain window features, min-max scaling and data-setup assembly.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "intent/csv.hpp"
#include "intent/dataset.hpp"
#include "intent/error.hpp"
#include "intent/numcore/matrix.hpp"

namespace intent {

enum class FeatureKind { IAV, MAV, MMAV1, MMAV2, SSI, VAR, RMS, WL, LOG, SKEW, KURT };

inline constexpr std::size_t kFeatureCount = 11;

inline constexpr std::array<FeatureKind, kFeatureCount> kAllFeatures = {
    FeatureKind::IAV, FeatureKind::MAV, FeatureKind::MMAV1, FeatureKind::MMAV2, FeatureKind::SSI,  FeatureKind::VAR,
    FeatureKind::RMS, FeatureKind::WL,  FeatureKind::LOG,   FeatureKind::SKEW,  FeatureKind::KURT};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "iav", "mav", "mmav1", "mmav2", "ssi", "var", "rms", "wl", "log", "skew", "kurt"};

inline constexpr std::string_view to_string(FeatureKind k) { return kFeatureNames[static_cast<std::size_t>(k)]; }

struct FeatureOptions {
    // Use 4(N-n)/N instead of 4(n-N)/N for the MMAV2 upper tail.
    bool mmav2_positive_tail = false;
    // Lower clamp on |x| before log10.
    double log_epsilon = 1e-12;
};

using FeatureVector = std::array<double, kFeatureCount>;

namespace detail {

// Weights are indexed 1..N.
inline double mmav1_weight(std::size_t n, std::size_t N) {
    const double x = static_cast<double>(n);
    const double lo = 0.25 * static_cast<double>(N);
    const double hi = 0.75 * static_cast<double>(N);
    return (x >= lo && x <= hi) ? 1.0 : 0.5;
}

inline double mmav2_weight(std::size_t n, std::size_t N, bool positive_tail) {
    const double x = static_cast<double>(n);
    const double nn = static_cast<double>(N);
    if (x >= 0.25 * nn && x <= 0.75 * nn) return 1.0;
    if (x < 0.25 * nn) return 4.0 * x / nn;
    return positive_tail ? 4.0 * (nn - x) / nn : 4.0 * (x - nn) / nn;
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Sum of (x - mu)^p.
inline double central_sum(std::span<const double> x, double mu, int p) {
    double s = 0.0;
    for (double v : x) {
        const double d = v - mu;
        double t = d * d;
        if (p == 3) t *= d;
        if (p == 4) t *= t;
        s += t;
    }
    return s;
}

inline bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace detail

inline double compute_feature(FeatureKind kind, std::span<const double> x, const FeatureOptions& opts = {}) {
    const std::size_t N = x.size();
    if (N < 2) {
        throw Error(ErrorCode::DegenerateWindow, "window needs at least 2 samples, got " + std::to_string(N), std::nullopt,
                    std::string(to_string(kind)));
    }
    const double n_real = static_cast<double>(N);
    switch (kind) {
        case FeatureKind::IAV:
        case FeatureKind::MAV: {
            // IAV is formed as N * MAV so the two agree bit for bit.
            double s = 0.0;
            for (double v : x) s += std::abs(v);
            const double mav = s / n_real;
            return kind == FeatureKind::MAV ? mav : n_real * mav;
        }
        case FeatureKind::MMAV1: {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += detail::mmav1_weight(i + 1, N) * std::abs(x[i]);
            return s / n_real;
        }
        case FeatureKind::MMAV2: {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += detail::mmav2_weight(i + 1, N, opts.mmav2_positive_tail) * std::abs(x[i]);
            return s / n_real;
        }
        case FeatureKind::SSI: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        }
        case FeatureKind::VAR: {
            const double mu = detail::mean(x);
            return detail::central_sum(x, mu, 2) / (n_real - 1.0);
        }
        case FeatureKind::RMS: return std::sqrt(compute_feature(FeatureKind::SSI, x, opts) / n_real);
        case FeatureKind::WL: {
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < N; ++i) s += std::abs(x[i + 1] - x[i]);
            return s;
        }
        case FeatureKind::LOG: {
            double s = 0.0;
            for (double v : x) s += std::log10(std::max(std::abs(v), opts.log_epsilon));
            return s / n_real;
        }
        case FeatureKind::SKEW:
        case FeatureKind::KURT: {
            const double mu = detail::mean(x);
            const double m2 = detail::central_sum(x, mu, 2);
            if (detail::is_constant(x) || m2 == 0.0) {
                throw Error(ErrorCode::ConstantWindow, "constant window has no defined " + std::string(to_string(kind)),
                            std::nullopt, std::string(to_string(kind)));
            }
            if (kind == FeatureKind::SKEW) {
                const double num = detail::central_sum(x, mu, 3) / n_real;
                return num / std::pow(m2 / n_real, 1.5);
            }
            // Fourth moment over N, squared variance over N-1.
            const double num = detail::central_sum(x, mu, 4) / n_real;
            const double var = m2 / (n_real - 1.0);
            return num / (var * var);
        }
    }
    return 0.0;
}

inline double compute_feature(FeatureKind kind, const SegmentWindow& w, const FeatureOptions& opts = {}) {
    return compute_feature(kind, std::span<const double>(w.values), opts);
}

inline FeatureVector extract_feature_vector(std::span<const double> x, const FeatureOptions& opts = {}) {
    FeatureVector out{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        try {
            out[k] = compute_feature(kAllFeatures[k], x, opts);
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), e.index(), std::string(to_string(kAllFeatures[k])));
        }
    }
    return out;
}

inline FeatureVector extract_feature_vector(const SegmentWindow& w, const FeatureOptions& opts = {}) {
    try {
        return extract_feature_vector(std::span<const double>(w.values), opts);
    } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " (window " + std::to_string(w.source_hit) + ")",
                    static_cast<std::size_t>(w.source_hit), e.context());
    }
}

// ---------------------------------------------------------------------------
// Min-max scaling

class Scaler {
public:
    Scaler() = default;
    Scaler(std::vector<double> mins, std::vector<double> maxs) : min_(std::move(mins)), max_(std::move(maxs)) {}

    std::size_t columns() const { return min_.size(); }
    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }

private:
    std::vector<double> min_;
    std::vector<double> max_;
};

inline Scaler fit_scaler(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) throw Error(ErrorCode::EmptyMatrix, "cannot fit a scaler on an empty matrix");
    std::vector<double> lo(m.row(0).begin(), m.row(0).end());
    std::vector<double> hi = lo;
    for (std::size_t r = 1; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            lo[c] = std::min(lo[c], m(r, c));
            hi[c] = std::max(hi[c], m(r, c));
        }
    }
    return Scaler(std::move(lo), std::move(hi));
}

// (x - min) / (max - min); constant columns map to 0; no clipping.
inline Matrix apply_scaler(const Scaler& s, const Matrix& m) {
    if (m.cols != s.columns()) {
        throw Error(ErrorCode::ColumnMismatch, "scaler fitted on " + std::to_string(s.columns()) + " columns, got " +
                                                   std::to_string(m.cols));
    }
    Matrix out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double range = s.maxs()[c] - s.mins()[c];
            out(r, c) = range > 0.0 ? (m(r, c) - s.mins()[c]) / range : 0.0;
        }
    }
    return out;
}

inline Matrix invert_scaler(const Scaler& s, const Matrix& m) {
    if (m.cols != s.columns()) throw Error(ErrorCode::ColumnMismatch, "column count differs from scaler");
    Matrix out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c) * (s.maxs()[c] - s.mins()[c]) + s.mins()[c];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data setups

enum class SetupId { D1 = 1, D2, D3, D4, D5, D6, D7, D8 };

inline constexpr std::array<SetupId, 8> kAllSetups = {SetupId::D1, SetupId::D2, SetupId::D3, SetupId::D4,
                                                      SetupId::D5, SetupId::D6, SetupId::D7, SetupId::D8};

inline std::string to_string(SetupId id) { return "D" + std::to_string(static_cast<int>(id)); }

inline SetupId parse_setup(std::string_view text) {
    for (SetupId id : kAllSetups) {
        if (to_string(id) == text) return id;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown data setup '" + std::string(text) + "'");
}

struct SetupParts {
    bool features = false;  // time-domain features
    bool gaze = false;
    bool probs = false;  // first-model segment probabilities
    bool raw = false;    // raw resistance per hit
};

inline constexpr SetupParts setup_parts(SetupId id) {
    switch (id) {
        case SetupId::D1: return {false, false, false, true};
        case SetupId::D2: return {true, false, false, false};
        case SetupId::D3: return {false, true, false, false};
        case SetupId::D4: return {false, false, true, false};
        case SetupId::D5: return {true, true, false, false};
        case SetupId::D6: return {true, false, true, false};
        case SetupId::D7: return {false, true, true, false};
        case SetupId::D8: return {true, true, true, false};
    }
    return {};
}

inline std::size_t setup_width(SetupId id, std::size_t gaze_width) {
    const SetupParts p = setup_parts(id);
    return (p.raw ? 1 : 0) + (p.features ? kFeatureCount : 0) + (p.gaze ? gaze_width : 0) +
           (p.probs ? static_cast<std::size_t>(kSegments) : 0);
}

// Labels and provenance for one sample row.
struct RowInfo {
    std::string participant_id;
    TaskShape shape = TaskShape::Diamond;
    int hit = 0;  // destination hit for window rows, the hit itself for raw rows
    SegmentLabel segment;
    Direction direction = Direction::Clockwise;

    bool operator==(const RowInfo&) const = default;
};

struct DataMatrix {
    SetupId id = SetupId::D2;
    Matrix x;
    std::vector<RowInfo> rows;
};

enum class Target { Segment, Direction };

inline std::vector<int> labels_for(std::span<const RowInfo> rows, Target target) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(target == Target::Segment ? r.segment.value : direction_class(r.direction));
    return out;
}

inline std::vector<int> labels_for(const DataMatrix& d, Target target) { return labels_for(d.rows, target); }

// Per-shape building blocks. Window rows are ordered participant-major then by
// destination hit; raw rows likewise by hit.
struct ShapeDataset {
    TaskShape shape = TaskShape::Diamond;
    std::size_t gaze_width = 0;
    Matrix features;                 // windows x 11
    Matrix gaze;                     // windows x G, gaze at the destination hit
    Matrix raw;                      // hits x 1
    std::vector<RowInfo> window_rows;
    std::vector<RowInfo> raw_rows;
};

inline ShapeDataset build_shape_dataset(std::span<const ParticipantRecord> records, TaskShape shape,
                                        const FeatureOptions& opts = {}) {
    ShapeDataset ds;
    ds.shape = shape;
    for (const auto& rec : records) {
        if (rec.shape != shape) continue;
        if (rec.windows.size() != static_cast<std::size_t>(kWindowsPerTask) ||
            rec.gaze.size() != static_cast<std::size_t>(kHitsPerTask) ||
            rec.hits.size() != static_cast<std::size_t>(kHitsPerTask)) {
            throw Error(ErrorCode::InvalidHits, "record needs 39 windows, 40 gaze rows and 40 hits", std::nullopt,
                        rec.participant_id);
        }
        const std::size_t g = rec.gaze.front().features.size();
        if (ds.gaze_width == 0) ds.gaze_width = g;
        for (const auto& w : rec.windows) {
            const FeatureVector fv = extract_feature_vector(w, opts);
            ds.features.append_row(fv);
            const auto& gz = rec.gaze[static_cast<std::size_t>(w.dest_hit - 1)].features;
            if (gz.size() != ds.gaze_width) {
                throw Error(ErrorCode::MixedGazeWidth, "gaze rows differ in width", std::nullopt, rec.participant_id);
            }
            ds.gaze.append_row(gz);
            ds.window_rows.push_back({rec.participant_id, shape, w.dest_hit, assign_segment_label(w.dest_hit), rec.direction});
        }
        const auto raw = hit_resistance(rec.trace, rec.hits);
        for (std::size_t k = 0; k < raw.size(); ++k) {
            const double v = raw[k];
            ds.raw.append_row(std::span<const double>(&v, 1));
            const int hit = static_cast<int>(k) + 1;
            ds.raw_rows.push_back({rec.participant_id, shape, hit, assign_segment_label(hit), rec.direction});
        }
    }
    if (ds.window_rows.empty()) {
        throw Error(ErrorCode::EmptyMatrix, "no records for shape " + std::string(to_string(shape)));
    }
    return ds;
}

// Horizontal concatenation in the fixed order features | gaze | probs.
// D1 is the raw per-hit resistance on its own.
inline DataMatrix assemble_setup(SetupId id, const Matrix* features, const Matrix* gaze, const Matrix* probs,
                                 const Matrix* raw, std::span<const RowInfo> window_rows,
                                 std::span<const RowInfo> raw_rows = {}) {
    const SetupParts p = setup_parts(id);
    auto missing = [&](const char* part) {
        return Error(ErrorCode::MissingPart, to_string(id) + " requires " + part, std::nullopt, to_string(id));
    };
    DataMatrix out;
    out.id = id;
    if (p.raw) {
        if (raw == nullptr || raw->rows == 0) throw missing("raw resistance");
        if (raw->cols != 1) throw Error(ErrorCode::ShapeMismatch, "raw resistance must be one column");
        if (raw_rows.size() != raw->rows) throw Error(ErrorCode::RowCountMismatch, "raw labels differ from raw rows");
        out.x = *raw;
        out.rows.assign(raw_rows.begin(), raw_rows.end());
        return out;
    }
    std::vector<const Matrix*> parts;
    if (p.features) {
        if (features == nullptr || features->rows == 0) throw missing("time-domain features");
        if (features->cols != kFeatureCount) throw Error(ErrorCode::ShapeMismatch, "feature matrix must have 11 columns");
        parts.push_back(features);
    }
    if (p.gaze) {
        if (gaze == nullptr || gaze->rows == 0) throw missing("gaze");
        parts.push_back(gaze);
    }
    if (p.probs) {
        if (probs == nullptr || probs->rows == 0) throw missing("first-model probabilities");
        if (probs->cols != static_cast<std::size_t>(kSegments)) {
            throw Error(ErrorCode::ShapeMismatch, "probability matrix must have 4 columns");
        }
        parts.push_back(probs);
    }
    for (const Matrix* m : parts) {
        if (m->rows != window_rows.size()) {
            throw Error(ErrorCode::RowCountMismatch, to_string(id) + ": part has " + std::to_string(m->rows) +
                                                         " rows, labels have " + std::to_string(window_rows.size()));
        }
    }
    out.x = hconcat(parts);
    out.rows.assign(window_rows.begin(), window_rows.end());
    return out;
}

inline DataMatrix assemble_setup(SetupId id, const ShapeDataset& ds, const Matrix* probs = nullptr) {
    return assemble_setup(id, &ds.features, &ds.gaze, probs, &ds.raw, ds.window_rows, ds.raw_rows);
}

// Feature CSV: the 11 canonical columns followed by row labels.
inline std::string feature_csv(const Matrix& features, std::span<const RowInfo> rows) {
    if (features.cols != kFeatureCount) throw Error(ErrorCode::ShapeMismatch, "feature matrix must have 11 columns");
    if (features.rows != rows.size()) throw Error(ErrorCode::RowCountMismatch, "feature rows differ from labels");
    std::ostringstream out;
    for (std::size_t k = 0; k < kFeatureCount; ++k) out << (k ? "," : "") << kFeatureNames[k];
    out << ",participant_id,shape,dest_hit,segment,direction\n";
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t c = 0; c < kFeatureCount; ++c) out << (c ? "," : "") << csv::format_number(features(r, c));
        const auto& info = rows[r];
        out << ',' << info.participant_id << ',' << to_string(info.shape) << ',' << info.hit << ',' << info.segment.value
            << ',' << to_string(info.direction) << '\n';
    }
    return out.str();
}

}  // namespace intent
