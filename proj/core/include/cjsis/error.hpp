#ifndef CJSIS_ERROR_HPP
#define CJSIS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cjsis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed capture-history input. The message names the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " at line " + std::to_string(line)), line_{line} {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration or argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Every importance weight of a subsample is zero.
class DepletionError : public Error {
 public:
  using Error::Error;
};

/// The sampler could not start or produced an invalid state.
class SamplerError : public Error {
 public:
  using Error::Error;
};

}  // namespace cjsis

#endif
