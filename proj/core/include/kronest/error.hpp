#pragma once

#include <stdexcept>
#include <string>

namespace kronest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failures: non-PD factors, degenerate samples, ill-posed solves.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefiniteError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IllConditionedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateSampleError : public NumericalError {
public:
    DegenerateSampleError(const std::string& what, std::size_t sample_index)
        : NumericalError(what), sample_index_(sample_index) {}
    std::size_t sample_index() const noexcept { return sample_index_; }

private:
    std::size_t sample_index_;
};

/// Raised when shrinkage factors are too small for a solution to be guaranteed.
class ExistenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

/// I/O and configuration problems.
class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public IoError {
public:
    ParseError(const std::string& what, std::size_t offset)
        : IoError(what + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ConfigError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace kronest
