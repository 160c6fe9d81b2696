#pragma once

#include <exception>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cabandit {

enum class ErrorKind { Argument, Config, Data, Numerical, State };

std::string_view to_string(ErrorKind kind);

// Process exit status for an error category: 2 config, 3 data, 4 numerical, 1 otherwise.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& m) : Error(ErrorKind::Argument, m) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorKind::Data, m) {}
};

struct StateError : Error {
    explicit StateError(const std::string& m) : Error(ErrorKind::State, m) {}
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& m, double residual)
        : Error(ErrorKind::Numerical, m + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    // Keeps `full_message` as is (already carrying the residual).
    struct Verbatim {};
    NumericalError(Verbatim, const std::string& full_message, double residual)
        : Error(ErrorKind::Numerical, full_message), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Rethrows `error` as an Error of the same kind with `context` prepended to the message.
// Non-cabandit exceptions become State errors.
[[noreturn]] void rethrow_with_context(std::exception_ptr error, const std::string& context);

}  // namespace cabandit
