#pragma once

#include <stdexcept>
#include <string>

namespace cpb {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidSchedule : public Error {
public:
  using Error::Error;
};

class InvalidLaw : public Error {
public:
  using Error::Error;
};

class InvalidHistory : public Error {
public:
  using Error::Error;
};

// Histories with different horizons or arrival counts are not ordered.
class IncomparableInputs : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

class CapacityError : public Error {
public:
  using Error::Error;
};

class PreconditionError : public Error {
public:
  using Error::Error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

class DegenerateModel : public Error {
public:
  using Error::Error;
};

class SearchFailure : public Error {
public:
  using Error::Error;
};

// Malformed configuration or command line; line is 0 when not applicable.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace cpb
