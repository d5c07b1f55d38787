#pragma once

#include <stdexcept>
#include <string>

namespace seqmem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller violated a documented precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input data (dataset rows, run logs, bundles) failed validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed text that should have been parseable (JSONL, templates).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Bad or missing configuration. Maps to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Model gateway failure after retries. Maps to CLI exit code 3.
class GatewayError : public Error {
public:
    explicit GatewayError(const std::string& msg, bool retryable = false)
        : Error(msg), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_ = false;
};

/// A runtime invariant was broken. Maps to CLI exit code 4.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// A horizon with no admissible task/checkpoint pairs.
class EmptyHorizonError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// Thrown when a run stops early; the run directory holds a resume token.
class RunAborted : public Error {
public:
    RunAborted(const std::string& msg, int last_completed_step)
        : Error(msg), last_completed_step_(last_completed_step) {}
    int last_completed_step() const { return last_completed_step_; }

private:
    int last_completed_step_ = 0;
};

} // namespace seqmem
