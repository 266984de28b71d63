#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace porgysim {

/// Source of randomness threaded through every stochastic operation.
/// One instance per simulation run; a single seed reproduces a branch.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  /// Uniform draw in (0, 1].
  virtual double open_unit() = 0;
  /// Uniform index in [0, n); n > 0.
  virtual std::size_t index(std::size_t n) = 0;

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * (1.0 - open_unit()); }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }
};

/// mt19937_64 with portable conversions (no std distributions), so that
/// runs are bit-identical across standard library implementations.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed = 0) : engine_(seed) {}

  double open_unit() override;
  std::size_t index(std::size_t n) override;

  /// Engine state as text, for session snapshots.
  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace porgysim
