#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtqsar {

enum class ErrorCode {
    InvalidArgument,
    Io,
    EmptyInput,
    ParseError,
    DuplicateCompound,
    InsufficientRows,
    AssayTooSmall,
    UnknownAssay,
    UnknownCompound,
    UndefinedGain,
    BadFeatureCount,
    ShapeError,
    StaleTrace,
    NumericalDivergence,
    BadEpoch,
    EmptyAssay,
    UndefinedAUC,
    NoValidRuns,
    BadVariance,
    GPError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse failure with 1-based line and column of the offending cell.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Raised when a forward pass or parameter update produces a non-finite value.
class NumericalDivergence : public Error {
public:
    NumericalDivergence(int layer, const std::string& message)
        : Error(ErrorCode::NumericalDivergence, message + " (layer " + std::to_string(layer) + ")"),
          layer_(layer) {}

    [[nodiscard]] int layer() const noexcept { return layer_; }

private:
    int layer_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace mtqsar
