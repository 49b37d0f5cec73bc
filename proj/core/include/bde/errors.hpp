#pragma once

#include <stdexcept>
#include <string>

namespace bde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: bad hyperparameter, unknown config key, bad CLI usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problems with input data: CSV parsing, shape mismatches, bad labels.
class DataError : public Error {
public:
    using Error::Error;
};

/// Shape disagreement between data and a network configuration.
class ShapeError : public DataError {
public:
    using DataError::DataError;
};

/// Non-finite values encountered during numeric evaluation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Sampler divergence (fatal after the single warmup restart).
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Model container I/O errors, each corruption mode distinct.
class ContainerError : public DataError {
public:
    using DataError::DataError;
};

class ChecksumError : public ContainerError {
public:
    using ContainerError::ContainerError;
};

class VersionError : public ContainerError {
public:
    using ContainerError::ContainerError;
};

class TruncatedError : public ContainerError {
public:
    using ContainerError::ContainerError;
};

}  // namespace bde
