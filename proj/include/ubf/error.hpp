#pragma once

#include <stdexcept>
#include <string>

namespace ubf {

enum class ErrorKind { Config, Io, Numeric, Shape };

/// Library error carrying a category; the CLI maps each category to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

}  // namespace ubf
