#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace porgysim {

/// Machine-readable error categories. The CLI prints the name next to the
/// message; the service maps them onto HTTP statuses.
enum class ErrorCode {
  invalid_graph,
  unknown_element,
  kind_mismatch,
  parse_error,
  invalid_rule,
  unsupported,
  expression_error,
  rewrite_error,
  strategy_error,
  budget_exceeded,
  config_error,
  unknown_state,
  io_error,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with a source location. `line`/`column` are 1-based;
/// `offset` is the 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column, std::size_t offset);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::size_t offset_;
};

/// Computes the 1-based line/column of `offset` inside `text`.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

}  // namespace porgysim
