#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coevo {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was not met by the caller.
class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Grammar errors

class GrammarError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public GrammarError {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message)
      : GrammarError(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class DuplicateRule : public GrammarError {
 public:
  explicit DuplicateRule(std::string name)
      : GrammarError("duplicate rule '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnresolvedRuleReference : public GrammarError {
 public:
  explicit UnresolvedRuleReference(std::string name)
      : GrammarError("unresolved rule reference '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnsupportedConstruct : public GrammarError {
 public:
  explicit UnsupportedConstruct(const std::string& description)
      : GrammarError("unsupported construct: " + description) {}
};

// ---------------------------------------------------------------------------
// Instance errors

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string expected, std::string found)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": expected " + expected +
              " but found " + found),
        line_(line),
        column_(column),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string expected_;
  std::string found_;
};

class AmbiguityLimitExceeded : public Error {
 public:
  explicit AmbiguityLimitExceeded(std::size_t budget)
      : Error("backtracking budget of " + std::to_string(budget) + " steps exceeded") {}
};

// ---------------------------------------------------------------------------
// Migration errors

class InternalMismatch : public Error {
 public:
  using Error::Error;
};

class AnchorNotFound : public Error {
 public:
  explicit AnchorNotFound(std::size_t token)
      : Error("edit anchor token #" + std::to_string(token) + " not found in document") {}
};

class PostconditionViolated : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Provider errors

class ProviderError : public Error {
 public:
  using Error::Error;
};

class Timeout : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

}  // namespace coevo
