#pragma once

#include <stdexcept>
#include <string>

namespace tgmem {

// Exception taxonomy. The CLI maps ConfigError to exit code 2 and every other
// Error to exit code 1, so new error types should derive from one of these.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class EmptyStreamError : public Error {
public:
    explicit EmptyStreamError(const std::string& msg) : Error(msg) {}
};

class SaturationError : public Error {
public:
    explicit SaturationError(const std::string& msg) : Error(msg) {}
};

class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Carries the dotted path of the offending config field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& msg)
        : Error(field + ": " + msg), field_(field) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace tgmem
