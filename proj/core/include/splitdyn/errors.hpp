#pragma once

#include <stdexcept>
#include <string>

namespace splitdyn {

/// Base class for all anticipated failures; the CLI maps each subclass to a
/// distinct exit code.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Launch data rejected: (1-m)a + mb <= 0.
class stability_error : public error {
public:
    using error::error;
};

/// Fixed-point iteration failed to contract (ratio >= 1 or class escape).
class contraction_error : public error {
public:
    using error::error;
};

/// Characteristic ordering broken during time stepping.
class ordering_error : public error {
public:
    using error::error;
};

/// Equilibrium not detected within the configured horizon.
class convergence_error : public error {
public:
    using error::error;
};

/// Malformed run configuration.
class config_error : public error {
public:
    using error::error;
};

/// Domain violations, bracketing failures, non-finite evaluations.
class numeric_error : public error {
public:
    using error::error;
};

} // namespace splitdyn
