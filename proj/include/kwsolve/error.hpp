#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kw {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition or input invariant was violated.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A field file or CSV table could not be decoded.
class FormatError : public Error {
public:
    using Error::Error;
};

/// An iterative linear solve failed to reach its tolerance.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Expression syntax error. `offset()` is the byte offset into the source text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Expression evaluation produced a non-finite or undefined value.
class EvalError : public Error {
public:
    EvalError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace kw
