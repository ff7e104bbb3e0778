#pragma once

#include <stdexcept>
#include <string>

namespace fkoc {

// Base class for every error raised by the library. Numeric failures and
// bad inputs are kept separate so the CLI can map them to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed config, unparsable expression, shape mismatch.
class InputError : public Error {
public:
    using Error::Error;
};

// Numeric failure: pole hit, radius exceeded, singular system, divergence.
class NumericError : public Error {
public:
    using Error::Error;
};

class PoleError : public NumericError {
public:
    using NumericError::NumericError;
};

class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

class RadiusError : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularSeriesError : public NumericError {
public:
    using NumericError::NumericError;
};

class MismatchedBetaError : public InputError {
public:
    using InputError::InputError;
};

class GridTooCoarse : public InputError {
public:
    using InputError::InputError;
};

class SingularSampleError : public NumericError {
public:
    using NumericError::NumericError;
};

class ShapeMismatch : public InputError {
public:
    using InputError::InputError;
};

class PremiseViolation : public NumericError {
public:
    using NumericError::NumericError;
};

class NonMonotoneG : public InputError {
public:
    using InputError::InputError;
};

class HypothesisViolation : public NumericError {
public:
    using NumericError::NumericError;
};

class EvalError : public NumericError {
public:
    using NumericError::NumericError;
};

class SyntaxError : public InputError {
public:
    SyntaxError(const std::string& msg, std::size_t offset)
        : InputError(msg + " (at offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class LinearSolveError : public NumericError {
public:
    using NumericError::NumericError;
};

class NoConvergence : public NumericError {
public:
    NoConvergence(const std::string& msg, int iterations, double last_residual)
        : NumericError(msg), iterations(iterations), last_residual(last_residual) {}

    int iterations;
    double last_residual;
};

} // namespace fkoc
