#pragma once

#include <stdexcept>
#include <string>

namespace frlbench {

// Base of every error the library raises. The CLI maps DataError subclasses
// to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class EmptyFileError : public DataError {
public:
    explicit EmptyFileError(const std::string& path)
        : DataError("empty file: " + path) {}
};

// A declared column is absent from the input.
class SchemaError : public DataError {
public:
    explicit SchemaError(std::string column)
        : DataError("schema mismatch: missing column \"" + column + "\""),
          column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

// A cell could not be parsed as a number. `row` is the 1-based data row
// (the header is not counted).
class ParseError : public DataError {
public:
    ParseError(std::size_t row, const std::string& column, const std::string& cell)
        : DataError("parse error at row " + std::to_string(row) + ", column \"" + column +
                    "\": cannot read \"" + cell + "\" as a number"),
          row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class MissingValueError : public DataError {
public:
    MissingValueError(std::size_t row, const std::string& column)
        : DataError("missing value at row " + std::to_string(row) + ", column \"" + column + "\""),
          row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Shape or size disagreement between two inputs.
class DimensionError : public DataError {
public:
    using DataError::DataError;
};

// A dataset or parameter record violates its invariants.
class InvalidArgument : public DataError {
public:
    using DataError::DataError;
};

class UnknownTaskError : public DataError {
public:
    explicit UnknownTaskError(const std::string& task)
        : DataError("unknown task \"" + task + "\"") {}
};

// A declared sensitive group has no rows where one was required.
class UndefinedGroupError : public DataError {
public:
    explicit UndefinedGroupError(int group)
        : DataError("sensitive group " + std::to_string(group) + " has no rows") {}
};

class NonBinaryColumnError : public DataError {
public:
    NonBinaryColumnError(const std::string& column, std::size_t row)
        : DataError("column \"" + column + "\" is not binary (row " + std::to_string(row) + ")") {}
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace frlbench
