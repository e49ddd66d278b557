#pragma once

#include <stdexcept>
#include <string>

namespace diqkd {

// Thrown for inputs outside an operation's declared domain.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Thrown for mismatched behavior / table shapes.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or incomplete serialized input.
struct ParseError : ShapeError {
    using ShapeError::ShapeError;
};

// Root bracket without a sign change.
struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Status { ok, clipped };

// A scalar with a flag telling whether a vacuous-domain clip was applied.
struct Value {
    double v = 0.0;
    Status status = Status::ok;
    std::string note;
};

struct Root {
    double x = 0.0;
    double residual = 0.0;
    double lo = 0.0, hi = 0.0;
};

inline const char* status_name(Status s) { return s == Status::ok ? "ok" : "domain-clipped"; }

}  // namespace diqkd
