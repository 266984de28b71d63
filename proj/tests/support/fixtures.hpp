#pragma once

#include <deque>
#include <string>
#include <vector>

#include <porgysim/expression.hpp>
#include <porgysim/portgraph.hpp>
#include <porgysim/random.hpp>

namespace fixtures {

/// Returns queued draws for open_unit(); falls back to the last one.
class ScriptedRandom final : public porgysim::RandomSource {
 public:
  explicit ScriptedRandom(std::vector<double> draws) : draws_(draws.begin(), draws.end()) {}
  double open_unit() override {
    if (draws_.size() > 1) {
      double d = draws_.front();
      draws_.pop_front();
      return d;
    }
    return draws_.empty() ? 1.0 : draws_.front();
  }
  std::size_t index(std::size_t) override { return 0; }

 private:
  std::deque<double> draws_;
};

/// Maps `name` / `v` style references straight onto a table of values.
class TableContext final : public porgysim::EvalContext {
 public:
  void set(const std::string& ref, const std::string& attr, porgysim::Value v) {
    values_.emplace_back(ref + "." + attr, std::move(v));
  }
  std::optional<porgysim::Value> property(const porgysim::ElementRef& ref, std::string_view attr) const override {
    std::string key = ref.first + (ref.second.empty() ? "" : "," + ref.second) + "." + std::string(attr);
    for (const auto& [k, v] : values_) {
      if (k == key) return v;
    }
    return std::nullopt;
  }

 private:
  std::vector<std::pair<std::string, porgysim::Value>> values_;
};

}  // namespace fixtures
