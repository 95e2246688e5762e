#ifndef PSTORM_ERROR_HPP
#define PSTORM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pstorm {

// Base of every error thrown by the library. The harness maps the concrete
// type onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed numerical input (vectors, samples).
class InputError : public Error {
 public:
  using Error::Error;
};

// A scalar parameter outside its admissible range (eta <= 0, m0 = 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A parameter schedule that violates a feasibility condition.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent data files and datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pstorm

#endif  // PSTORM_ERROR_HPP
