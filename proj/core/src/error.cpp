#include "porgysim/error.hpp"

#include <fmt/format.h>

#include "porgysim/ids.hpp"

namespace porgysim {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_graph: return "invalid_graph";
    case ErrorCode::unknown_element: return "unknown_element";
    case ErrorCode::kind_mismatch: return "kind_mismatch";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::invalid_rule: return "invalid_rule";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::expression_error: return "expression_error";
    case ErrorCode::rewrite_error: return "rewrite_error";
    case ErrorCode::strategy_error: return "strategy_error";
    case ErrorCode::budget_exceeded: return "budget_exceeded";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::unknown_state: return "unknown_state";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

const char* to_string(ElementKind kind) noexcept {
  switch (kind) {
    case ElementKind::node: return "node";
    case ElementKind::port: return "port";
    case ElementKind::edge: return "edge";
  }
  return "?";
}

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column,
                       std::size_t offset)
    : Error(ErrorCode::parse_error,
            fmt::format("{}:{}: {} (offset {})", line, column, message, offset)),
      line_(line),
      column_(column),
      offset_(offset) {}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace porgysim
