#ifndef CNSPK_ERROR_HPP
#define CNSPK_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cnspk {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed data, invalid configuration, unknown names.
/// The CLI maps this family to exit code 1 and the service to HTTP 422.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Valid input that could not be computed (solver failures, infeasible fits).
/// The CLI maps this family to exit code 2.
class ComputationError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidProfile : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnknownParameter : public ValidationError {
public:
    explicit UnknownParameter(const std::string& name)
        : ValidationError("unknown parameter '" + name + "'"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class NumericDomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidBounds : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A sweep multiplier pushed a parameter outside its manifest bounds.
class BoundViolation : public ValidationError {
public:
    BoundViolation(const std::string& what, double multiplier)
        : ValidationError(what), multiplier_(multiplier) {}
    double multiplier() const noexcept { return multiplier_; }

private:
    double multiplier_;
};

/// CSV rejection. Row is the 1-based line number of the record (header = 1),
/// column is 1-based; column_name is empty when the column has no header.
class DataError : public ValidationError {
public:
    DataError(const std::string& message, std::size_t row, std::size_t column,
              std::string column_name = {})
        : ValidationError(format(message, row, column, column_name)),
          row_(row),
          column_(column),
          column_name_(std::move(column_name)) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& column_name() const noexcept { return column_name_; }

private:
    static std::string format(const std::string& message, std::size_t row, std::size_t column,
                              const std::string& name) {
        std::string out = "row " + std::to_string(row) + ", column " + std::to_string(column);
        if (!name.empty()) out += " (" + name + ")";
        return out + ": " + message;
    }

    std::size_t row_;
    std::size_t column_;
    std::string column_name_;
};

class IntegrationFailure : public ComputationError {
public:
    IntegrationFailure(const std::string& what, double last_good_time)
        : ComputationError(what), last_good_time_(last_good_time) {}
    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

class NumericBlowup : public IntegrationFailure {
public:
    using IntegrationFailure::IntegrationFailure;
};

class InfeasibleProblem : public ComputationError {
public:
    using ComputationError::ComputationError;
};

/// Cooperative cancellation was observed.
class Cancelled : public Error {
public:
    Cancelled() : Error("cancelled") {}
};

}  // namespace cnspk

#endif  // CNSPK_ERROR_HPP
