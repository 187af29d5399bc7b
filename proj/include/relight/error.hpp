#pragma once

#include <stdexcept>
#include <string>

namespace relight {

// Every failure raised by the library derives from Error so callers can
// catch one type and still dispatch on the kind when they need to.
class Error : public std::runtime_error {
 public:
  enum class Kind { domain, range, shape, config, numeric, io };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& w) : Error(Kind::domain, w) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& w) : Error(Kind::range, w) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& w) : Error(Kind::shape, w) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error(Kind::config, w) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& w) : Error(Kind::numeric, w) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& w) : Error(Kind::io, w) {}
};

}  // namespace relight
