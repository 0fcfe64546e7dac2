#pragma once

#include <stdexcept>
#include <string>

namespace phg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Evaluation left the smoothness domain of a node (e.g. a negative power of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class CertificationError : public Error {
 public:
  using Error::Error;
};

/// f(x, xi, 0) does not vanish, so f is not divisible by t.
class NotInI0Error : public Error {
 public:
  using Error::Error;
};

/// A scaling limit s^{-m} u(x, delta_s xi) failed to settle.
class NonHomogeneousError : public Error {
 public:
  using Error::Error;
};

class TermNotSymbolError : public Error {
 public:
  using Error::Error;
};

class HorizonError : public Error {
 public:
  using Error::Error;
};

class ExpansionMismatchError : public Error {
 public:
  using Error::Error;
};

/// Grid data is not resolved by the sampling box (tail mass above tolerance).
class AliasingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised inside a multi-stage pipeline with its stage label.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace phg
