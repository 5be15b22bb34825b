#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geodesy {

enum class ErrorKind {
    Syntax,
    UnknownIdentifier,
    NonHolomorphicPrimitive,
    Domain,
    OutOfDomain,
    SingularMetric,
    StepSizeUnderflow,
    StartOnSingularSet,
    TurningPointAtStart,
    OutsideSupport,
    DenominatorVanishes,
    ResidualTooLarge,
    QuadratureFailure,
    ZeroCrossingOfU,
    NegativeRadicand,
    RiccatiResidualTooLarge,
    PathLeavesSupport,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Base class for every error raised by the library. The kind identifies the
/// failed contract; the message carries the details.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& message);

    /// Zero-based byte offset into the source text.
    std::size_t position() const noexcept { return position_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

} // namespace geodesy
