#pragma once

#include <stdexcept>
#include <string>

namespace jdc {

/// Base class for every error raised by the library. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. sigma <= 0, hours <= 0).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Model specification or run configuration is inconsistent.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Input data is malformed or insufficient.
class DataError : public Error {
  public:
    using Error::Error;
};

/// CSV header does not carry a required column.
class SchemaError : public DataError {
  public:
    explicit SchemaError(const std::string &column)
        : DataError("missing required column '" + column + "'"), column_(column) {}

    const std::string &column() const noexcept { return column_; }

  private:
    std::string column_;
};

/// Covariate name that is not part of an equation.
class LookupError : public Error {
  public:
    using Error::Error;
};

/// Likelihood ordering violated (LL(beta) < LL(r)).
class OrderingError : public Error {
  public:
    using Error::Error;
};

/// No optimizer start satisfied the convergence criteria.
class ConvergenceError : public Error {
  public:
    using Error::Error;
};

} // namespace jdc
