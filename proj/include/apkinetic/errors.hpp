#pragma once

#include <stdexcept>
#include <string>

namespace apkinetic {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-facing configuration (grid sizes, CFL, scheme names, files).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Two grid functions living on different velocity grids were combined.
class GridMismatchError : public Error {
public:
    using Error::Error;
};

// A state with no usable density (temperature undefined).
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

// Maxwellian construction from nonpositive density or temperature.
class InvalidMomentsError : public Error {
public:
    using Error::Error;
};

// Entropy evaluation hit a genuinely negative density value.
class NegativeDensityError : public Error {
public:
    using Error::Error;
};

// (lambda*I + A) is not invertible; reports the offending diagonal.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, int diagonal_index)
        : Error(what), diagonal(diagonal_index) {}
    int diagonal;  // 1-based stage index of the vanishing pivot
};

// A stage value left the representable range during time stepping.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, int stage_index, double lambda_value)
        : Error(what), stage(stage_index), lambda(lambda_value) {}
    int stage;      // 1-based stage index where the blow-up was detected
    double lambda;  // eps/(mu*dt) of the offending step
};

// Filesystem problems, always carrying the path in the message.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace apkinetic
