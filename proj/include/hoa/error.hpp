#pragma once

#include <stdexcept>
#include <string>

namespace hoa {

/// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind : int {
    Io = 1,
    Validation = 2,
    Rule = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

/// File system and decoding failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Inputs that violate a precondition: bad labels, missing landmarks, shape mismatches.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// Geometry the rules cannot work with, e.g. collinear midline landmarks.
class RuleError : public Error {
public:
    explicit RuleError(const std::string& what) : Error(ErrorKind::Rule, what) {}
};

} // namespace hoa
