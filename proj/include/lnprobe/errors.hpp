#pragma once

#include <stdexcept>
#include <string>

namespace lnprobe {

// Failure categories. The CLI maps each one onto a process exit code.
enum class ErrorKind {
    usage,       // bad flags, contradictory configuration
    format,      // wrong magic, unsupported version, malformed text
    corruption,  // truncated or internally inconsistent container
    validation,  // invariant violated by the data itself
    io,          // cannot open/read/write a file
    numeric,     // undefined or degenerate numeric result
    training,    // optimizer diverged
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class CorruptionError : public Error {
public:
    explicit CorruptionError(const std::string& what) : Error(ErrorKind::corruption, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error(ErrorKind::training, what) {}
};

// Throws the subclass matching kind, so callers can add context without losing the type.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
    switch (kind) {
    case ErrorKind::usage: throw ConfigError(what);
    case ErrorKind::format: throw FormatError(what);
    case ErrorKind::corruption: throw CorruptionError(what);
    case ErrorKind::validation: throw ValidationError(what);
    case ErrorKind::io: throw IoError(what);
    case ErrorKind::numeric: throw NumericError(what);
    case ErrorKind::training: throw TrainingError(what);
    }
    throw Error(kind, what);
}

}  // namespace lnprobe
