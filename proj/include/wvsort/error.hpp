#pragma once

#include <stdexcept>
#include <string>

namespace wvsort {

/// Invalid configuration value or missing key. Maps to CLI exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable data file. Maps to CLI exit status 2.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated operation precondition (unsorted input, short stream, ...).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite inputs or divergent optimisation. Maps to CLI exit status 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Residues of an embedding are mutually inconsistent (corrupted or masked).
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes do not line up for an operation.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace wvsort
