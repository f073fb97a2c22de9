#pragma once

#include <stdexcept>
#include <string>

namespace gil {

/// Base class for all library errors. Subclasses tell the caller which
/// contract was broken; the CLI maps them to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/layer shape disagreement.
struct DimensionError : Error {
    using Error::Error;
};

/// An operation was called outside its contract (e.g. non-scalar loss).
struct ContractError : Error {
    using Error::Error;
};

/// A requested configuration is outside the supported subset.
struct CapabilityError : Error {
    using Error::Error;
};

/// NaN/Inf or other numeric breakdown.
struct NumericError : Error {
    using Error::Error;
};

/// Bad argument values (empty sets, missing entries, out-of-range ids).
struct InputError : Error {
    using Error::Error;
};

/// Malformed file content.
struct FormatError : Error {
    using Error::Error;
};

/// State would become inconsistent (duplicate class, overlap with buffer).
struct ConsistencyError : Error {
    using Error::Error;
};

/// Invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Randomized construction failed to satisfy its postcondition.
struct GenerationError : Error {
    using Error::Error;
};

} // namespace gil
