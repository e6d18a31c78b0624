#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace solar {

enum class ErrorCategory {
    InvalidArgument,
    InfeasibleSubsidy,
    DegenerateThreshold,
    ImmediateAdoption,
    EmptyInterval,
    NoFeasiblePolicy,
    DegenerateLine,
    NumericalDerivativeFailure,
    ParseError,
    ValidationError,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCategory c) noexcept {
    switch (c) {
    case ErrorCategory::InvalidArgument: return "InvalidArgument";
    case ErrorCategory::InfeasibleSubsidy: return "InfeasibleSubsidy";
    case ErrorCategory::DegenerateThreshold: return "DegenerateThreshold";
    case ErrorCategory::ImmediateAdoption: return "ImmediateAdoption";
    case ErrorCategory::EmptyInterval: return "EmptyInterval";
    case ErrorCategory::NoFeasiblePolicy: return "NoFeasiblePolicy";
    case ErrorCategory::DegenerateLine: return "DegenerateLine";
    case ErrorCategory::NumericalDerivativeFailure: return "NumericalDerivativeFailure";
    case ErrorCategory::ParseError: return "ParseError";
    case ErrorCategory::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

/// Base of every exception thrown by the library. The category is stable and
/// machine readable; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Raised by configuration validation; names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(ErrorCategory::ValidationError, field + ": " + message),
          field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
    if (!condition) fail(category, message);
}

}  // namespace solar
