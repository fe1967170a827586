#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optexec {

/// Base for every error raised by the library. The CLI maps subclasses onto
/// its exit-code contract (config/argument problems vs numerical failures).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed caller input: bad shapes, empty grids, non-positive counts.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input outside the mathematical domain (p <= 1, t >= T for a singular value).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The model violates the integrability conditions needed for a minimal solution.
class IntegrabilityError : public Error {
public:
    using Error::Error;
};

/// The requested operation has no implementation for this model family.
class UnsupportedModelError : public Error {
public:
    using Error::Error;
};

/// Rejected JSON configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (root find, regression, inconsistent limits).
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t node)
        : Error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
    explicit NumericalError(const std::string& what) : Error(what) {}

    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_ = static_cast<std::size_t>(-1);
};

}  // namespace optexec
