#pragma once

#include <stdexcept>
#include <string>

namespace tvws {

/// Base class for all domain errors raised by the engine.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A location falls outside the configured area of interest.
struct OutOfAreaError : DomainError {
    explicit OutOfAreaError(const std::string& what) : DomainError(what) {}
};

/// A channel index that is not part of the active channel plan.
struct UnknownChannelError : DomainError {
    explicit UnknownChannelError(const std::string& what) : DomainError(what) {}
};

/// A power class with neither a separation-table row nor a calibration to
/// interpolate from.
struct UnknownPowerError : DomainError {
    explicit UnknownPowerError(const std::string& what) : DomainError(what) {}
};

/// Non-positive or otherwise unusable propagation distance.
struct InvalidDistanceError : DomainError {
    explicit InvalidDistanceError(const std::string& what) : DomainError(what) {}
};

/// A field-strength target that cannot be reached inside the model bracket.
struct OutOfRangeError : DomainError {
    explicit OutOfRangeError(const std::string& what) : DomainError(what) {}
};

/// A report whose timestamp is older than the contributor's newest report by
/// more than the configured skew.
struct StaleTimestampError : DomainError {
    explicit StaleTimestampError(const std::string& what) : DomainError(what) {}
};

/// Malformed input files, config values, or wire bodies.
struct ValidationError : std::runtime_error {
    std::string field;
    explicit ValidationError(const std::string& what, std::string field_name = {})
        : std::runtime_error(what), field(std::move(field_name)) {}
};

/// Filesystem-level failures (missing file, unwritable path).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tvws
