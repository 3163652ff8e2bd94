#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tlsloss {

enum class ErrorKind {
    InvalidArgument,     // precondition violated
    InvalidModel,        // circuit model invariants violated
    InfeasibleGeometry,  // implied capacitance smaller than inductor capacitance
    Underdetermined,     // not enough distinct data to fit
    NonphysicalFit,      // fit converged to a non-physical parameter set
    InsufficientBaseline,
    FitFailure,
    OutOfSpan,
    IllConditioned,
    InconsistentInputs,
    Range,
    Parse,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for all toolkit errors. The kind maps one-to-one onto
/// CLI exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tlsloss
