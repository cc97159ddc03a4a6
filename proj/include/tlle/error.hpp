#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tlle {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's JSON error reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }
    const char* kind() const noexcept override { return "parse_error"; }

private:
    std::size_t row_;
};

class StructuralError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "structural_error"; }
};

class NumericError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric_error"; }
};

/// A neighborhood whose local spectrum or Gram-Schmidt basis is rank deficient.
class RankDeficiencyError : public NumericError {
public:
    RankDeficiencyError(std::size_t point, const std::string& what)
        : NumericError("point " + std::to_string(point) + ": " + what), point_(point) {}
    std::size_t point() const noexcept { return point_; }
    const char* kind() const noexcept override { return "rank_deficiency"; }

private:
    std::size_t point_;
};

/// More than one (numerically) zero eigenvalue in the alignment matrix.
class DegenerateNullSpaceError : public NumericError {
public:
    using NumericError::NumericError;
    const char* kind() const noexcept override { return "degenerate_null_space"; }
};

} // namespace tlle
