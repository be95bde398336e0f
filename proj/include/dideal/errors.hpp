#pragma once

#include <stdexcept>
#include <string>

namespace dideal {

/// Parameters outside a chart box, or too close to its boundary for a stencil.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rank loss, vanishing pivots, non-definite metrics.
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape data that does not fit the normal form it was asked to match.
struct NormalFormError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Companion fields whose mixed partials disagree beyond tolerance.
struct InconsistentFieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad arguments or unsupported combinations.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace dideal
