#pragma once

#include <stdexcept>
#include <string>

namespace microvol {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the valid range of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or mis-sized file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise invalid sample data.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Volume dimensions incompatible with the requested block hierarchy.
class PartitionError : public Error {
public:
    using Error::Error;
};

/// A working set that cannot fit the configured cache, or a grid that exceeds
/// the configured memory budget.
class CapacityError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace microvol
