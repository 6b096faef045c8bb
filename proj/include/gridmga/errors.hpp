#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridmga {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based, 0 when the problem is not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out;
        for (const auto& s : issues) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
    std::vector<std::string> issues_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The request conflicts with the current state, e.g. a solve is already running.
class ConflictError : public Error {
public:
    using Error::Error;
};

/// The optimization model has no feasible point. `causes` names the
/// constraint groups whose relaxation restores feasibility.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& message, std::vector<std::string> causes)
        : Error(message), causes_(std::move(causes)) {}

    const std::vector<std::string>& causes() const noexcept { return causes_; }

private:
    std::vector<std::string> causes_;
};

class TimeoutError : public Error {
public:
    TimeoutError(const std::string& message, bool has_incumbent, double incumbent_objective)
        : Error(message), has_incumbent_(has_incumbent), incumbent_(incumbent_objective) {}

    bool has_incumbent() const noexcept { return has_incumbent_; }
    double incumbent_objective() const noexcept { return incumbent_; }

private:
    bool has_incumbent_;
    double incumbent_;
};

}  // namespace gridmga
