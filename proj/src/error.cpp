#include "geodesy/error.hpp"

#include <utility>

namespace geodesy {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::NonHolomorphicPrimitive: return "NonHolomorphicPrimitive";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::StartOnSingularSet: return "StartOnSingularSet";
    case ErrorKind::TurningPointAtStart: return "TurningPointAtStart";
    case ErrorKind::OutsideSupport: return "OutsideSupport";
    case ErrorKind::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::ZeroCrossingOfU: return "ZeroCrossingOfU";
    case ErrorKind::NegativeRadicand: return "NegativeRadicand";
    case ErrorKind::RiccatiResidualTooLarge: return "RiccatiResidualTooLarge";
    case ErrorKind::PathLeavesSupport: return "PathLeavesSupport";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind)
{
}

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& message)
    : Error(ErrorKind::Syntax, message), position_(position), expected_(std::move(expected))
{
}

} // namespace geodesy
