#ifndef EMBEDOPT_ERRORS_HPP
#define EMBEDOPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace embedopt {

// Base class for all errors raised by the library.  Numerical failures
// derive from NumericalError so the CLI can map them to a distinct exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A Cholesky pivot was <= 0: the damping is too small or the matrix is not psd.
class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Linear CG met a direction of nonpositive curvature.
class BreakdownNonPSD : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class CalibrationFailed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The kernel normalizer of a normalized model underflowed to zero.
class DegenerateQ : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OracleScaleExceeded : public Error {
public:
    using Error::Error;
};

class CacheMissing : public Error {
public:
    using Error::Error;
};

class LineSearchFailed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace embedopt

#endif
