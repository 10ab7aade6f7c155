#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace uoptime {

// mt19937_64 output is fully specified by the standard; the distributions are
// not, so uniform draws go through the helpers below to keep results identical
// across standard library implementations.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Folds the given parts into a seed. Order matters.
class SeedBuilder {
public:
  explicit SeedBuilder(std::uint64_t base) : state_(splitmix64(base)) {}

  SeedBuilder& add(std::uint64_t v) {
    state_ = splitmix64(state_ ^ splitmix64(v + 0x632be59bd9b4e019ULL));
    return *this;
  }
  SeedBuilder& add(std::string_view s) { return add(fnv1a(s)); }
  template <typename Int>
  SeedBuilder& add(std::span<const Int> values) {
    add(static_cast<std::uint64_t>(values.size()));
    for (auto v : values) add(static_cast<std::uint64_t>(v));
    return *this;
  }

  std::uint64_t value() const { return state_; }

private:
  std::uint64_t state_;
};

// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

// Fisher-Yates.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace uoptime
