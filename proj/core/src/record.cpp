#include "porgysim/record.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

const char* to_string(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::boolean: return "bool";
    case ValueKind::integer: return "int";
    case ValueKind::real: return "real";
    case ValueKind::text: return "text";
    case ValueKind::ref: return "ref";
  }
  return "?";
}

std::optional<ValueKind> value_kind_from_string(std::string_view name) noexcept {
  if (name == "bool") return ValueKind::boolean;
  if (name == "int") return ValueKind::integer;
  if (name == "real") return ValueKind::real;
  if (name == "text") return ValueKind::text;
  if (name == "ref") return ValueKind::ref;
  return std::nullopt;
}

namespace {

[[noreturn]] void wrong_kind(ValueKind have, const char* want) {
  throw Error(ErrorCode::kind_mismatch,
              fmt::format("expected a {} value, found {}", want, to_string(have)));
}

}  // namespace

bool Value::as_bool() const {
  if (auto* v = std::get_if<bool>(&data_)) return *v;
  wrong_kind(kind(), "bool");
}

std::int64_t Value::as_int() const {
  if (auto* v = std::get_if<std::int64_t>(&data_)) return *v;
  wrong_kind(kind(), "int");
}

double Value::as_real() const {
  if (auto* v = std::get_if<double>(&data_)) return *v;
  if (auto* v = std::get_if<std::int64_t>(&data_)) return static_cast<double>(*v);
  wrong_kind(kind(), "real");
}

const std::string& Value::as_text() const {
  if (auto* v = std::get_if<std::string>(&data_)) return *v;
  wrong_kind(kind(), "text");
}

ElementId Value::as_ref() const {
  if (auto* v = std::get_if<ElementId>(&data_)) return *v;
  wrong_kind(kind(), "ref");
}

std::string Value::to_display() const {
  switch (kind()) {
    case ValueKind::boolean: return as_bool() ? "true" : "false";
    case ValueKind::integer: return fmt::format("{}", as_int());
    case ValueKind::real: return fmt::format("{}", as_real());
    case ValueKind::text: return fmt::format("\"{}\"", as_text());
    case ValueKind::ref: return fmt::format("#{}", raw(as_ref()));
  }
  return {};
}

Record Record::from_entries(std::vector<Entry> entries) {
  Record r;
  for (auto& [name, value] : entries) r.insert(std::move(name), std::move(value));
  return r;
}

const Value* Record::find(std::string_view name) const noexcept {
  for (const auto& [n, v] : entries_) {
    if (n == name) return &v;
  }
  return nullptr;
}

std::optional<Value> Record::get(std::string_view name) const {
  if (const auto* v = find(name)) return *v;
  return std::nullopt;
}

void Record::set(std::string_view name, Value value) {
  for (auto& [n, v] : entries_) {
    if (n == name) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::string(name), std::move(value));
}

void Record::insert(std::string name, Value value) {
  if (contains(name)) {
    throw Error(ErrorCode::invalid_graph, fmt::format("duplicate attribute '{}' in record", name));
  }
  entries_.emplace_back(std::move(name), std::move(value));
}

bool Record::erase(std::string_view name) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry& e) { return e.first == name; });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

}  // namespace porgysim
