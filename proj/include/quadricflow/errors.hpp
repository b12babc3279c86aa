#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qflow {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched dimensions or bias modes between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed input files (JSON, CSV) or invalid flag values.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A mathematical precondition does not hold. Every error below is one.
class DomainError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public DomainError {
public:
    using DomainError::DomainError;
};

/// The operation is not defined in bias mode (e.g. per-neuron output split).
class UnsupportedModeError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Topological quantity requested outside the regime where it is known (d = 1).
class UnsupportedRegimeError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Two parameter points do not lie on the same invariant set.
class DifferentInvariantSetError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Endpoints lie in different connected components.
class NoPathError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Target component is outside the effective component of the source.
class NotReachableError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Sign vector requested on a neuron whose output weight vanished.
class InconsistencyError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class RescaleFailure {
    degenerate_neuron,         // A = 0 and C = 0, target != 0
    zero_input_needs_negative, // A = 0, target >= 0
    zero_output_needs_positive // C = 0, target <= 0
};

/// No positive rescaling moves neuron `neuron()` onto the requested hyperquadric.
class InfeasibleRescalingError : public DomainError {
public:
    InfeasibleRescalingError(std::size_t neuron, RescaleFailure reason, const std::string& what)
        : DomainError(what), neuron_(neuron), reason_(reason) {}

    std::size_t neuron() const noexcept { return neuron_; }
    RescaleFailure reason() const noexcept { return reason_; }

private:
    std::size_t neuron_;
    RescaleFailure reason_;
};

} // namespace qflow
