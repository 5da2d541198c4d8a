#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssd {

/// Shape or axis-length mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Contraction descriptor outside the supported set, or malformed.
class UnsupportedContraction : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration detected before any compute (sharding, grids, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A normalization denominator evaluated to zero.
class DegenerateRowError : public std::runtime_error {
public:
    explicit DegenerateRowError(std::size_t row)
        : std::runtime_error("normalization denominator is zero at row " + std::to_string(row)),
          row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace ssd
