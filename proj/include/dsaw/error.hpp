#pragma once

#include <stdexcept>
#include <string>

namespace dsaw {

// Base of every exception thrown by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad flags, mismatched model/task combinations, violated preconditions.
class UsageError : public Error {
public:
    using Error::Error;
};

// Unreadable files, malformed records, empty or degenerate data.
class DataError : public Error {
public:
    using Error::Error;
};

// A learned model that breaks a structural guarantee (e.g. a bit that is both
// added and deleted).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Syntax errors in PDDL or grammar input; carries the source position.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, int line, int column)
        : DataError(what + " at line " + std::to_string(line) + ", column " +
                    std::to_string(column)),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace dsaw
