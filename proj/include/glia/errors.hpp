#pragma once

#include <stdexcept>
#include <string>

namespace glia {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map classes of failure onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Bad magic, bad header, bad version.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

// Header parsed but the payload is short.
class PayloadError : public Error {
 public:
  using Error::Error;
};

// A stored tensor does not match the shape the config expects.
class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NanLossError : public Error {
 public:
  using Error::Error;
};

}  // namespace glia
