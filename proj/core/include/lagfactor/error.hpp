#pragma once

#include <stdexcept>
#include <string>

namespace lagfactor {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto a distinct exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or sizes that do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter values, configuration, or out-of-range arguments.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Non-finite intermediates, failed decompositions, singular systems.
class NumericError : public Error {
public:
    using Error::Error;
};

/// File system and parsing failures.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace lagfactor
