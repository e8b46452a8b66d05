#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mist {

// Base for every failure raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class DiagonalizationError : public Error {
public:
    explicit DiagonalizationError(const std::string& what) : Error("diagonalization", what) {}
};

// Root bracketing failed; carries the achievable interval.
class BracketError : public Error {
public:
    BracketError(const std::string& what, double lo, double hi)
        : Error("bracket", what), lo_(lo), hi_(hi) {}
    double achievable_min() const noexcept { return lo_; }
    double achievable_max() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

class SimulationError : public Error {
public:
    explicit SimulationError(const std::string& what) : Error("simulation", what) {}
};

class FitError : public Error {
public:
    explicit FitError(const std::string& what) : Error("fit", what) {}
};

}  // namespace mist
