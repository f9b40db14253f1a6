#pragma once

#include <stdexcept>
#include <string>

namespace mcpd {

// Error hierarchy shared by the whole toolkit. The CLI maps these onto
// process exit codes: ArgumentError -> 1, ParseError/SchemaError/IoError -> 2,
// TrainingError -> 3.
struct McpdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad value passed to a library operation (fraction out of range, empty
// series, non-finite input, ...).
struct ArgumentError : McpdError {
    using McpdError::McpdError;
};

// Malformed input text; carries the 1-based line number when known.
struct ParseError : McpdError {
    ParseError(const std::string& msg, long line)
        : McpdError("line " + std::to_string(line) + ": " + msg), line_number(line) {}
    explicit ParseError(const std::string& msg) : McpdError(msg), line_number(0) {}
    long line_number;
};

// Structurally valid input that violates the data schema (duplicate ids,
// wrong period count, dimension mismatch, ...).
struct SchemaError : McpdError {
    using McpdError::McpdError;
};

struct IoError : McpdError {
    using McpdError::McpdError;
};

struct TrainingError : McpdError {
    using McpdError::McpdError;
};

struct InternalError : McpdError {
    using McpdError::McpdError;
};

}  // namespace mcpd
