#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "intent/error.hpp"

namespace intent {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows = init.size();
        cols = rows ? init.begin()->size() : 0;
        data.reserve(rows * cols);
        for (const auto& r : init) {
            if (r.size() != cols) throw Error(ErrorCode::ShapeMismatch, "ragged matrix literal");
            data.insert(data.end(), r.begin(), r.end());
        }
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const { return rows == 0 || cols == 0; }

    void append_row(std::span<const double> values) {
        if (rows == 0 && cols == 0) cols = values.size();
        if (values.size() != cols) throw Error(ErrorCode::ShapeMismatch, "row width differs from matrix width");
        data.insert(data.end(), values.begin(), values.end());
        ++rows;
    }

    bool operator==(const Matrix&) const = default;
};

inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = m.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

// Horizontal concatenation; all parts must share the row count.
inline Matrix hconcat(std::span<const Matrix* const> parts) {
    if (parts.empty()) return {};
    const std::size_t rows = parts.front()->rows;
    std::size_t cols = 0;
    for (const Matrix* p : parts) {
        if (p->rows != rows) throw Error(ErrorCode::RowCountMismatch, "hconcat: row counts differ");
        cols += p->cols;
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto dst = out.row(r).begin();
        for (const Matrix* p : parts) {
            const auto src = p->row(r);
            dst = std::copy(src.begin(), src.end(), dst);
        }
    }
    return out;
}

}  // namespace intent
