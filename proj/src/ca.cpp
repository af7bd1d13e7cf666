#include "cabench/ca.hpp"

#include <bit>

#include "cabench/error.hpp"

namespace cabench {

namespace {

void check_radius(int radius) {
  if (radius < 1 || radius > kMaxRadius) {
    throw InvalidInput("radius must be in 1.." + std::to_string(kMaxRadius) + ", got " +
                       std::to_string(radius));
  }
}

std::uint64_t width_mask(int width) { return width == 64 ? ~0ull : (1ull << width) - 1; }

}  // namespace

Rule::Rule(int radius) : radius_(radius) { check_radius(radius); }

Rule::Rule(int radius, std::span<const std::uint8_t> bits) : Rule(radius) {
  if (static_cast<int>(bits.size()) != size()) {
    throw InvalidInput("rule of radius " + std::to_string(radius) + " needs " + std::to_string(size()) +
                       " bits, got " + std::to_string(bits.size()));
  }
  for (int i = 0; i < size(); ++i) set(i, bits[i] != 0);
}

Rule Rule::from_word(int radius, std::uint64_t table) {
  Rule rule(radius);
  if (radius > 2) throw InvalidInput("from_word supports radius <= 2");
  const int n = rule.size();
  rule.words_[0] = n == 64 ? table : table & ((1ull << n) - 1);
  return rule;
}

void Rule::set(int neighborhood, bool value) noexcept {
  const std::uint64_t m = 1ull << (neighborhood & 63);
  auto& w = words_[neighborhood >> 6];
  w = value ? (w | m) : (w & ~m);
}

CaState::CaState(int width, std::uint64_t cells) : width_(width) {
  if (width < 1 || width > kMaxWidth) {
    throw InvalidInput("state width must be in 1.." + std::to_string(kMaxWidth) + ", got " +
                       std::to_string(width));
  }
  cells_ = cells & width_mask(width);
}

void CaState::set(int i, bool value) noexcept {
  const std::uint64_t m = 1ull << i;
  cells_ = value ? (cells_ | m) : (cells_ & ~m);
}

int CaState::popcount() const noexcept { return std::popcount(cells_); }

std::string rule_encode(const Rule& rule) {
  std::string out(rule.size(), '0');
  for (int i = 0; i < rule.size(); ++i) out[i] = rule.bit(i) ? '1' : '0';
  return out;
}

Rule rule_decode(std::string_view bits, int radius) {
  Rule rule(radius);
  if (static_cast<int>(bits.size()) != rule.size()) {
    throw ParseError("rule string of radius " + std::to_string(radius) + " must have " +
                     std::to_string(rule.size()) + " characters, got " + std::to_string(bits.size()));
  }
  for (int i = 0; i < rule.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw ParseError("non-binary character in rule string at position " + std::to_string(i));
    }
    rule.set(i, bits[i] == '1');
  }
  return rule;
}

std::string state_encode(const CaState& state) {
  std::string out(state.width(), '0');
  for (int i = 0; i < state.width(); ++i) out[i] = state.cell(i) ? '1' : '0';
  return out;
}

CaState state_decode(std::string_view bits) {
  if (bits.empty() || bits.size() > static_cast<std::size_t>(kMaxWidth)) {
    throw ParseError("state string must have 1.." + std::to_string(kMaxWidth) + " characters, got " +
                     std::to_string(bits.size()));
  }
  std::uint64_t cells = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      cells |= 1ull << i;
    } else if (bits[i] != '0') {
      throw ParseError("non-binary character in state string at position " + std::to_string(i));
    }
  }
  return CaState(static_cast<int>(bits.size()), cells);
}

int neighborhood_index(const CaState& state, int w, int radius) {
  const int width = state.width();
  int index = 0;
  for (int j = 0; j <= 2 * radius; ++j) {
    const int cell = ((w - radius + j) % width + width) % width;
    index = (index << 1) | static_cast<int>(state.cell(cell));
  }
  return index;
}

CaState step(const CaState& state, const Rule& rule) {
  const int width = state.width();
  const int r = rule.radius();
  if (width < 2 * r + 1) {
    throw InvalidInput("state width " + std::to_string(width) + " is smaller than the neighborhood of radius " +
                       std::to_string(r));
  }
  const int mask = rule.size() - 1;
  const std::uint64_t cells = state.cells();
  // Sliding window: shift in the cell entering on the right.
  int index = neighborhood_index(state, 0, r);
  std::uint64_t out = static_cast<std::uint64_t>(rule.bit(index));
  int incoming = r + 1;
  for (int w = 1; w < width; ++w, ++incoming) {
    if (incoming == width) incoming = 0;
    index = ((index << 1) | static_cast<int>((cells >> incoming) & 1u)) & mask;
    out |= static_cast<std::uint64_t>(rule.bit(index)) << w;
  }
  return CaState(width, out);
}

Orbit orbit(const CaState& init, const Rule& rule, int steps) {
  if (steps < 1) throw InvalidInput("orbit length must be >= 1, got " + std::to_string(steps));
  Orbit result{rule, {}};
  result.states.reserve(steps);
  result.states.push_back(init);
  for (int t = 1; t < steps; ++t) result.states.push_back(step(result.states.back(), rule));
  return result;
}

CaState rotate(const CaState& state, int shift) {
  const int width = state.width();
  shift = ((shift % width) + width) % width;
  if (shift == 0) return state;
  const std::uint64_t c = state.cells();
  return CaState(width, (c << shift) | (c >> (width - shift)));
}

CaState reverse(const CaState& state) {
  CaState out(state.width(), 0);
  for (int i = 0; i < state.width(); ++i) out.set(state.width() - 1 - i, state.cell(i));
  return out;
}

Rule reflect(const Rule& rule) {
  const int bits = 2 * rule.radius() + 1;
  Rule out(rule.radius());
  for (int n = 0; n < rule.size(); ++n) {
    int rev = 0;
    for (int b = 0; b < bits; ++b) rev |= ((n >> b) & 1) << (bits - 1 - b);
    out.set(n, rule.bit(rev));
  }
  return out;
}

}  // namespace cabench
