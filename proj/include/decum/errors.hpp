#pragma once

#include <stdexcept>
#include <string>

namespace decum {

// Argument and domain violations use std::invalid_argument / std::domain_error.
// The three classes below map onto distinct CLI exit codes.

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (control files, return series).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not reach the required resolution.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace decum
