#include "porgysim/random.hpp"

#include <sstream>

#include "porgysim/error.hpp"

namespace porgysim {

double SeededRandom::open_unit() {
  // 53 random bits -> k in [0, 2^53); (k + 1) / 2^53 lies in (0, 1].
  auto k = engine_() >> 11;
  return static_cast<double>(k + 1) * 0x1.0p-53;
}

std::size_t SeededRandom::index(std::size_t n) {
  // Rejection sampling keeps the choice exactly uniform.
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::string SeededRandom::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void SeededRandom::restore(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) throw Error(ErrorCode::parse_error, "corrupt random engine state");
}

}  // namespace porgysim
