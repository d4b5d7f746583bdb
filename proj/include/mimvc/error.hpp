#pragma once

#include <stdexcept>
#include <string>

namespace mimvc {

// Base for all library failures. Shape/contract violations by the caller
// use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data: missing files, bad cells, invalid masks, absent labels.
class DataError : public Error {
public:
    using Error::Error;
};

// Unparseable or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Training could not continue (non-finite loss, degenerate projection).
class TrainingError : public Error {
public:
    using Error::Error;
};

class DegenerateProjection : public TrainingError {
public:
    using TrainingError::TrainingError;
};

}  // namespace mimvc
