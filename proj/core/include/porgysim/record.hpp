#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "porgysim/ids.hpp"

namespace porgysim {

enum class ValueKind : std::uint8_t { boolean, integer, real, text, ref };

const char* to_string(ValueKind kind) noexcept;
std::optional<ValueKind> value_kind_from_string(std::string_view name) noexcept;

/// A property value: boolean, 64-bit integer, 64-bit real, text, or a
/// reference to another element.
class Value {
 public:
  Value() : data_(false) {}
  Value(bool v) : data_(v) {}
  Value(int v) : data_(static_cast<std::int64_t>(v)) {}
  Value(std::int64_t v) : data_(v) {}
  Value(double v) : data_(v) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}
  Value(ElementId v) : data_(v) {}

  ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }
  bool is_numeric() const noexcept { return kind() == ValueKind::integer || kind() == ValueKind::real; }

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_real() const;  // integers widen
  const std::string& as_text() const;
  ElementId as_ref() const;

  std::string to_display() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  std::variant<bool, std::int64_t, double, std::string, ElementId> data_;
};

/// Ordered set of (attribute, value) entries; each attribute occurs once.
class Record {
 public:
  using Entry = std::pair<std::string, Value>;

  Record() = default;

  /// Throws Error(invalid_graph) if an attribute repeats.
  static Record from_entries(std::vector<Entry> entries);

  const Value* find(std::string_view name) const noexcept;
  std::optional<Value> get(std::string_view name) const;
  bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }

  /// Replaces in place (keeping position) or appends.
  void set(std::string_view name, Value value);
  /// Appends; throws if the attribute already exists.
  void insert(std::string name, Value value);
  bool erase(std::string_view name);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const Record&, const Record&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace porgysim
