#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xrt {

// Base of every recoverable error raised by the runtime.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal invariant (double decref, unmatched allow-threads end,
// double finalization...). The CLI maps these to exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class AllocationError : public Error {
 public:
  using Error::Error;
};

class ConversionError : public Error {
 public:
  using Error::Error;
};

class AttributeError : public Error {
 public:
  using Error::Error;
};

class TypeError : public Error {
 public:
  using Error::Error;
};

class CallError : public Error {
 public:
  using Error::Error;
};

class ExtensionError : public Error {
 public:
  using Error::Error;
};

class FormatSyntaxError : public Error {
 public:
  FormatSyntaxError(const std::string& what, std::size_t offset) : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class KindError : public Error {
 public:
  KindError(const std::string& what, std::size_t unit) : Error(what), unit_(unit) {}
  std::size_t unit() const noexcept { return unit_; }

 private:
  std::size_t unit_;
};

}  // namespace xrt
