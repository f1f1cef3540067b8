#pragma once

#include <stdexcept>
#include <string>

namespace nldiss {

/// Bad user input: malformed config, invalid parameter, unknown key.
/// The CLI maps this family to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Anything that went wrong while computing. The CLI maps this family to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be written. The CLI maps it to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class OutOfRangeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DimensionMismatchError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Population would reach (or has reached) the Fock cutoff.
class TruncationLeakageError : public NumericalError {
public:
    TruncationLeakageError(const std::string& what, int minimal_dim = -1)
        : NumericalError(what), minimal_dim_(minimal_dim) {}

    /// Smallest dimension that would pass the guard, or -1 if not known.
    int minimal_dim() const noexcept { return minimal_dim_; }

private:
    int minimal_dim_;
};

/// Raised by propagation when the top Fock level population exceeds its bound.
class TruncationBreachError : public NumericalError {
public:
    TruncationBreachError(const std::string& what, double time)
        : NumericalError(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

class StepSizeUnderflowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DimensionCapError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonUniqueSteadyStateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UndefinedRatioError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientDecayError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class BlockedRecurrenceError : public NumericalError {
public:
    BlockedRecurrenceError(const std::string& what, int index)
        : NumericalError(what), index_(index) {}

    int index() const noexcept { return index_; }

private:
    int index_;
};

/// The distribution still carries weight at the last basis state.
class TailGuardError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class WindowTooSmallError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UndefinedMandelQError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class CorruptedStateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateGadgetError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace nldiss
