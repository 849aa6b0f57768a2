#pragma once

#include <stdexcept>
#include <string>

namespace chainalloc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed scenario file (not JSON, wrong value types).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Scenario parsed but violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class InvalidAssignment : public Error {
public:
    using Error::Error;
};

/// Enumeration would exceed the configured combination cap.
class TooLarge : public Error {
public:
    using Error::Error;
};

/// No assignment satisfies the minimum-lifetime constraints.
class Infeasible : public Error {
public:
    using Error::Error;
};

class LPInfeasible : public Error {
public:
    using Error::Error;
};

class RoundingInfeasible : public Error {
public:
    using Error::Error;
};

class BrokenChain : public Error {
public:
    using Error::Error;
};

class PolicyFailure : public Error {
public:
    using Error::Error;
};

/// The heuristic could not keep some device above its minimum lifetime.
class MinLifetimeViolated : public Error {
public:
    MinLifetimeViolated(const std::string& device)
        : Error("MinLifetimeViolated: device '" + device + "'"), device_(device) {}

    const std::string& device() const noexcept { return device_; }

private:
    std::string device_;
};

}  // namespace chainalloc
