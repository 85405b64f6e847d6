#pragma once

#include <stdexcept>
#include <string>

namespace gengrid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or out-of-range value (intensity > 100, zero grid dimension, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Cell or object lookup that does not resolve.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Malformed scenario / message text. `line` and `column` are 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(what), line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gengrid
