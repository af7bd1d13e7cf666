#include "cabench/rng.hpp"

namespace cabench {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t domain, std::uint64_t index,
                         std::uint64_t salt) noexcept {
  std::uint64_t k = splitmix64(master_seed);
  k = splitmix64(k ^ splitmix64(domain + 0x243f6a8885a308d3ull));
  k = splitmix64(k ^ index);
  return splitmix64(k ^ splitmix64(salt + 0x13198a2e03707344ull));
}

std::uint64_t CounterRng::next() noexcept { return splitmix64(key_ + kGolden * ++counter_); }

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  const std::uint64_t limit = ~0ull - (~0ull % bound);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % bound;
}

std::uint64_t CounterRng::bits(int count) noexcept {
  const std::uint64_t x = next();
  return count >= 64 ? x : x & ((1ull << count) - 1);
}

double CounterRng::uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

}  // namespace cabench
