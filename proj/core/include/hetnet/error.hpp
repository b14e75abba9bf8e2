#pragma once

#include <stdexcept>
#include <string>

namespace hetnet {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or stream.
class ParseError : public Error {
public:
    using Error::Error;
};

// Caller violated a documented precondition (shape, sign, range).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss that step halving could not recover.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace hetnet
