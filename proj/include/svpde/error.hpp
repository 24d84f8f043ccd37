#pragma once

#include <stdexcept>
#include <string>

namespace svpde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. a time past the horizon).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (node counts, dimensions, missing callables).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Array shapes that do not line up (paths, steps, features).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Ill-posed linear algebra, e.g. a rank-deficient regression without ridge.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Forward simulation blew up; carries the offending path and step.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long path, long step)
        : Error(what), path_(path), step_(step) {}
    long path() const noexcept { return path_; }
    long step() const noexcept { return step_; }

private:
    long path_;
    long step_;
};

/// An iterative selection hit its cap without meeting the tolerance.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, long probe) : Error(what), probe_(probe) {}
    long probe() const noexcept { return probe_; }

private:
    long probe_;
};

}  // namespace svpde
