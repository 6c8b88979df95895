#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace mhke {

// std::shuffle and the std distributions are implementation-defined; these
// helpers pin the draw sequence so seeded artifacts are byte-identical across
// standard libraries.

/// Unbiased draw in [0, bound) by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::span<T> items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_below(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace mhke
