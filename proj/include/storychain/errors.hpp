#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace storychain {

// Base for every error the toolkit raises on purpose. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad parameter or configuration value (exit code 2).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Input data violates a contract: duplicate ids, missing labels, etc. (exit code 3).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : ValidationError(source + ":" + std::to_string(line) + ": " + what)
        , line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DegenerateCorpusError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingEmbeddingError : public ValidationError {
public:
    explicit MissingEmbeddingError(const std::string& id)
        : ValidationError("no embedding for document id \"" + id + "\"")
        , id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

// A metric is undefined for the given assignment (e.g. silhouette of one cluster).
class UndefinedMetricError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// The corpus cannot supply what a scenario needs (exit code 4).
class InfeasibleScenarioError : public Error {
public:
    using Error::Error;
};

}  // namespace storychain
