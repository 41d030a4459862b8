#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsched {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain argument.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent model / scenario / certificate file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Linear system has no unique solution (e.g. Lyapunov equation with non-Hurwitz A).
class SingularSystem : public Error {
public:
    using Error::Error;
};

class SimulationBlowUp : public Error {
public:
    SimulationBlowUp(std::size_t step, const std::string& what)
        : Error("simulation blow-up at step " + std::to_string(step) + ": " + what), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace gsched
