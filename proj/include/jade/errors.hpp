#pragma once

#include <stdexcept>
#include <string>

namespace jade {

/// Invalid user input: configuration, shapes, file contents.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Recoverable numerical failure (singular system, empty detection, bad geometry).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CalibrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EstimationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoPathError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GeometryError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ModelOrderError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace jade
