#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fwm {

/// Invalid angular momentum, projector, basis tag or model parameter.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input carries no information to act on (all-zero amplitudes or counts).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Measurement settings do not span the two-qubit operator space.
class SpanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver hit its cap; carries the best iterate reached.
template <typename Best>
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Best best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const Best& best() const noexcept { return best_; }

 private:
  Best best_;
};

/// Malformed input file. Line numbers are 1-based; 0 means "whole file".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : std::runtime_error(format(line, field, what)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(std::size_t line, const std::string& field, const std::string& what) {
    std::string s = "parse error";
    if (line > 0) s += " at line " + std::to_string(line);
    if (!field.empty()) s += " (field '" + field + "')";
    return s + ": " + what;
  }

  std::size_t line_;
  std::string field_;
};

}  // namespace fwm
