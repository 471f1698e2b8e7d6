#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tabula {

enum class ErrorKind {
  Bounds,
  Parse,
  UnknownName,
  Ambiguous,
  UnknownClass,
  MultiReference,
  Cycle,
  DivisionByZero,
  Type,
  EmptyAggregate,
  Expansion,
  Structure,
  Layout,
  Formula,
  Lift,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the engine.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Syntax error carrying the zero-based offset of the offending token.
class ParseError : public Error {
public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorKind::Parse, "col " + std::to_string(offset + 1) + ": " + message),
        offset_(offset),
        detail_(message) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::size_t offset_;
  std::string detail_;
};

}  // namespace tabula
