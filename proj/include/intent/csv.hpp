#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "intent/error.hpp"

namespace intent::csv {

// Minimal comma-separated reader: no quoting, '.' decimal separator,
// header row required.
struct Table {
    std::filesystem::path source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a named column or MissingColumn.
    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw Error(ErrorCode::MissingColumn, "missing column '" + std::string(name) + "'", std::nullopt,
                    source.filename().string());
    }
};

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        std::string_view cell = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        out.emplace_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string(), std::nullopt, path.filename().string());
    Table t;
    t.source = path;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            // Strip a UTF-8 byte order mark if present.
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            t.header = split_line(line);
            have_header = true;
            continue;
        }
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
    }
    if (!have_header) throw Error(ErrorCode::MissingColumn, "empty file, header required", std::nullopt,
                                  path.filename().string());
    return t;
}

// Parses a finite double; `row` is the 1-based data row used in diagnostics.
inline double parse_number(std::string_view text, std::size_t row, std::string_view what,
                           const std::filesystem::path& source = {}) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (!text.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorCode::NonNumericValue,
                    "non-numeric " + std::string(what) + " '" + std::string(text) + "' at row " + std::to_string(row),
                    row, source.filename().string());
    }
    return value;
}

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string(), std::nullopt, path.filename().string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string(), std::nullopt, path.filename().string());
}

}  // namespace intent::csv
