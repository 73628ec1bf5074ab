// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace rvi {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: unknown preset, malformed config, contract violation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mismatched grids or vector lengths.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Stencil assembly would produce a negative off-diagonal weight.
class MonotonicityError : public Error {
public:
    using Error::Error;
};

/// Linear solve failed, produced non-finite values, or the chain is reducible.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Non-finite or exploding values during time marching or simulation.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace rvi
