#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace intent {

enum class ErrorCode {
    IoError,
    MissingColumn,
    NonMonotonicTimestamp,
    NonNumericValue,
    MixedGazeWidth,
    InvalidHits,
    EmptyWindow,
    OutOfRange,
    InvalidConfig,
    DegenerateWindow,
    ConstantWindow,
    EmptyMatrix,
    ColumnMismatch,
    MissingPart,
    RowCountMismatch,
    ShapeMismatch,
    BadTarget,
    EmptyTrainingSet,
    SequenceTooShort,
    NotEnoughNeighbors,
    TooFewRows,
    LengthMismatch,
    InvalidCell,
    IncompleteTable,
    SerializationError,
    UnknownKey,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
        case ErrorCode::NonNumericValue: return "NonNumericValue";
        case ErrorCode::MixedGazeWidth: return "MixedGazeWidth";
        case ErrorCode::InvalidHits: return "InvalidHits";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::DegenerateWindow: return "DegenerateWindow";
        case ErrorCode::ConstantWindow: return "ConstantWindow";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::ColumnMismatch: return "ColumnMismatch";
        case ErrorCode::MissingPart: return "MissingPart";
        case ErrorCode::RowCountMismatch: return "RowCountMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::BadTarget: return "BadTarget";
        case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorCode::SequenceTooShort: return "SequenceTooShort";
        case ErrorCode::NotEnoughNeighbors: return "NotEnoughNeighbors";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InvalidCell: return "InvalidCell";
        case ErrorCode::IncompleteTable: return "IncompleteTable";
        case ErrorCode::SerializationError: return "SerializationError";
        case ErrorCode::UnknownKey: return "UnknownKey";
    }
    return "Unknown";
}

// Single exception type for the library. `index` carries the row, window or
// hit number the error refers to when there is one; `context` names the
// module/step/feature that raised it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> index = std::nullopt, std::string context = {})
        : std::runtime_error(message), code_(code), index_(index), context_(std::move(context)) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> index() const noexcept { return index_; }
    const std::string& context() const noexcept { return context_; }

    // Returns a copy with an outer context prefixed, e.g. "step1" + "mlp".
    Error with_context(std::string_view outer) const {
        std::string ctx(outer);
        if (!context_.empty()) {
            ctx += '/';
            ctx += context_;
        }
        return Error(code_, what(), index_, std::move(ctx));
    }

private:
    ErrorCode code_;
    std::optional<std::size_t> index_;
    std::string context_;
};

// One-line diagnostic: "error[Code] context: message".
inline std::string diagnostic(const Error& e) {
    std::string out = "error[";
    out += to_string(e.code());
    out += ']';
    if (!e.context().empty()) {
        out += ' ';
        out += e.context();
        out += ':';
    }
    out += ' ';
    out += e.what();
    return out;
}

}  // namespace intent
