#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>

namespace porgysim {

/// Stable identity of a node, port or edge. Unique across a whole
/// derivation history; never reused, even after deletion.
enum class ElementId : std::uint64_t {};

/// Identity of a committed state in a derivation tree.
enum class StateId : std::uint64_t {};

constexpr std::uint64_t raw(ElementId id) noexcept { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t raw(StateId id) noexcept { return static_cast<std::uint64_t>(id); }

inline constexpr ElementId kNoElement{0};

enum class ElementKind : std::uint8_t { node, port, edge };

const char* to_string(ElementKind kind) noexcept;

/// Per-history id counter. Shared by every graph derived from the same
/// root so that sibling branches never hand out the same id.
class IdSource {
 public:
  explicit IdSource(std::uint64_t next = 1) : next_(next) {}

  ElementId allocate() { return ElementId{next_.fetch_add(1, std::memory_order_relaxed)}; }

  /// Ensures future allocations are strictly above `id`.
  void reserve_through(ElementId id) {
    auto want = raw(id) + 1;
    auto cur = next_.load(std::memory_order_relaxed);
    while (cur < want && !next_.compare_exchange_weak(cur, want, std::memory_order_relaxed)) {
    }
  }

  std::uint64_t peek() const { return next_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> next_;
};

}  // namespace porgysim
