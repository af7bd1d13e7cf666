#pragma once

#include <cstdint>

namespace cabench {

inline constexpr const char* kRngAlgorithm = "splitmix64-ctr/v1";

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Stream key for one (master_seed, domain, index, salt) tuple. Distinct tuples
// give statistically independent streams, so generation order never matters.
std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t domain, std::uint64_t index,
                         std::uint64_t salt = 0) noexcept;

// Counter-mode generator: output n is splitmix64(key + n * golden).
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next() noexcept;
  // Uniform in [0, bound), bound > 0; unbiased by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;
  std::uint64_t bits(int count) noexcept;  // uniform over 2^count, count <= 64
  double uniform01() noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }
  result_type operator()() noexcept { return next(); }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cabench
