#pragma once

#include <stdexcept>
#include <string>

namespace gcyt {

/// Error categories double as process exit codes for the CLI.
enum class ErrorCategory : int {
    parameter = 2,
    geometry = 3,
    io = 4,
    numeric = 5,
    data = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& what) : Error(ErrorCategory::parameter, what) {}
};

struct GeometryError : Error {
    explicit GeometryError(const std::string& what) : Error(ErrorCategory::geometry, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

/// Raised when an operator has no energy (power iteration collapses to zero).
struct DegenerateOperatorError : Error {
    explicit DegenerateOperatorError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

/// Raised by the solver when the objective blows up relative to its best value.
struct StepSizeError : Error {
    explicit StepSizeError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

/// Centroid or anchor is undefined because the input carries no intensity.
struct UndefinedCentroidError : Error {
    explicit UndefinedCentroidError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Peak normalisation is undefined for an all-zero reference.
struct NormalizationError : Error {
    explicit NormalizationError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

struct NoObjectError : Error {
    explicit NoObjectError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Training or evaluation data with only one class present.
struct DegenerateDataError : Error {
    explicit DegenerateDataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ParameterError(what);
}

}  // namespace gcyt
