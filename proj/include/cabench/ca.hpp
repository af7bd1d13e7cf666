#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cabench {

inline constexpr int kMaxRadius = 3;
inline constexpr int kMaxWidth = 64;

// Number of distinct neighborhoods for radius r: 2^(2r+1).
constexpr int neighborhood_count(int radius) { return 1 << (2 * radius + 1); }

// Lookup table of a binary local rule. bit(i) is the output for the
// neighborhood whose MSB-first value is i (leftmost cell most significant).
class Rule {
public:
  Rule() = default;  // radius 2, all zeros
  explicit Rule(int radius);
  Rule(int radius, std::span<const std::uint8_t> bits);

  // Rules of radius <= 2 fit in one word; `table` holds bit i at position i.
  static Rule from_word(int radius, std::uint64_t table);

  int radius() const noexcept { return radius_; }
  int size() const noexcept { return neighborhood_count(radius_); }
  bool bit(int neighborhood) const noexcept {
    return (words_[neighborhood >> 6] >> (neighborhood & 63)) & 1u;
  }
  void set(int neighborhood, bool value) noexcept;

  // Low 64 table bits; the whole table when radius <= 2.
  std::uint64_t word() const noexcept { return words_[0]; }
  const std::array<std::uint64_t, 2>& words() const noexcept { return words_; }

  friend bool operator==(const Rule&, const Rule&) = default;

private:
  int radius_ = 2;
  std::array<std::uint64_t, 2> words_{};
};

// One lattice configuration of up to 64 cells; cell i lives at bit i.
class CaState {
public:
  CaState() = default;
  CaState(int width, std::uint64_t cells);

  int width() const noexcept { return width_; }
  std::uint64_t cells() const noexcept { return cells_; }
  bool cell(int i) const noexcept { return (cells_ >> i) & 1u; }
  void set(int i, bool value) noexcept;
  int popcount() const noexcept;

  friend bool operator==(const CaState&, const CaState&) = default;

private:
  int width_ = 0;
  std::uint64_t cells_ = 0;
};

struct Orbit {
  Rule rule;
  std::vector<CaState> states;
};

// Bit-strings: character i is bits[i] (rules) or cell i (states).
std::string rule_encode(const Rule& rule);
Rule rule_decode(std::string_view bits, int radius = 2);
std::string state_encode(const CaState& state);
CaState state_decode(std::string_view bits);

// Σ_j state[(w-r+j) mod W] · 2^(2r-j), j = 0..2r.
int neighborhood_index(const CaState& state, int w, int radius);

CaState step(const CaState& state, const Rule& rule);
Orbit orbit(const CaState& init, const Rule& rule, int steps);

// Cyclic rotation: result cell i == state cell (i - shift) mod W.
CaState rotate(const CaState& state, int shift);
CaState reverse(const CaState& state);
// Mirror rule: output for neighborhood n equals rule's output for reversed n.
Rule reflect(const Rule& rule);

}  // namespace cabench
