#pragma once

#include <stdexcept>
#include <string>

namespace riskbandit {

/// Base class for every error the library raises.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A statistic was requested from a buffer with no observations.
struct EmptyBuffer : Error {
    EmptyBuffer() : Error("statistic requested on an empty sample buffer") {}
};

/// A distributional assumption required by the requested oracle does not hold
/// (e.g. a CVaR oracle on an arm without a continuous CDF, or a vanishing
/// density at the quantile).
struct AssumptionViolated : Error {
    using Error::Error;
};

/// An iterative numeric routine hit its iteration cap before reaching the
/// requested tolerance.
struct NonConvergence : Error {
    using Error::Error;
};

/// Invalid run configuration (arm count, confidence level, horizons, ...).
struct BadConfig : Error {
    using Error::Error;
};

/// A recorded cost falls outside [0, M].
struct CostOutOfRange : Error {
    using Error::Error;
};

/// The risk spec lacks a bound constant the requested formula needs.
struct MissingConstant : Error {
    using Error::Error;
};

/// An index was requested for an arm that has never been pulled.
struct NotInitialized : Error {
    using Error::Error;
};

/// Two arms tie in oracle risk; the optimal arm must be unique.
struct NonUniqueOptimum : Error {
    using Error::Error;
};

/// A theoretical bound's guard condition fails (nonpositive denominator or
/// exhausted pull budget), so the bound value is undefined at these inputs.
struct DegenerateGap : Error {
    using Error::Error;
};

/// A decay-rate fit needs strictly positive regret values.
struct NonPositiveRegret : Error {
    using Error::Error;
};

/// Malformed configuration document.
struct ParseError : Error {
    using Error::Error;
};

/// Well-formed but invalid configuration value; the message names the field.
struct ValidationError : Error {
    using Error::Error;
};

/// Output files could not be created or fully written.
struct IoError : Error {
    using Error::Error;
};

} // namespace riskbandit
