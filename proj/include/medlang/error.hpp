#ifndef MEDLANG_ERROR_HPP
#define MEDLANG_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace medlang {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad flags, missing files, empty lexicon. Exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data. Exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Line-anchored parse failure in a newline-delimited input.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Solver failure (IRLS non-convergence, too many dropped replicates). Exit code 4.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace medlang

#endif  // MEDLANG_ERROR_HPP
