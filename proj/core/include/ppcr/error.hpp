#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppcr {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A cloud with no points (or too few for the requested statistic).
class EmptyCloudError : public Error {
public:
  using Error::Error;
};

/// A rotation outside the open ball of radius pi handled by the log map.
class OutOfChartError : public Error {
public:
  using Error::Error;
};

/// No source point found any target neighbor within the search radius.
class NoOverlapError : public Error {
public:
  using Error::Error;
};

/// Arguments violating a documented precondition.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Failure to open, read or write a file.
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed file content. Always carries the 1-based line of the problem.
class ParseError : public Error {
public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
  : Error(path + ":" + std::to_string(line) + ": " + what),
    line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

}  // namespace ppcr
