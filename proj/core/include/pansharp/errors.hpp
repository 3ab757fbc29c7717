#pragma once

#include <stdexcept>
#include <string>

namespace pansharp {

// Shape/extent mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A documented precondition was violated by the caller.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Anything wrong with input data: unreadable files, bad values, size violations.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

class UnknownVersionError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace pansharp
