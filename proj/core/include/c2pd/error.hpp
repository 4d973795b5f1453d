#pragma once

#include <stdexcept>
#include <string>

namespace c2pd {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero/negative dimensions, indivisible resampling factors, extents too short.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must agree in dimensions or lengths do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents: bad magic, truncated raster, inconsistent header.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File system failures (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or inconsistent parameter/window pairing.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Out-of-range input data (e.g. RGB channel outside [0,1]).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace c2pd
