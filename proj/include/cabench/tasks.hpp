#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cabench/ca.hpp"
#include "cabench/datagen.hpp"

namespace cabench {

// Token ids are frozen; "0" and "1" carry their bit value as id.
enum class Token : std::uint8_t {
  Zero = 0,
  One = 1,
  Sep = 2,
  Gen = 3,
  Mask = 4,
  Shift1 = 5,
  Shift2 = 6,
  Shift3 = 7,
  Shift4 = 8,
};

inline constexpr int kVocabSize = 9;

struct Vocab {
  static std::string_view glyph(Token token);
  static std::optional<Token> from_glyph(std::string_view glyph);
  static Token shift(int k);  // k in 1..4
  // {"tokens": {glyph: id, ...}} sidecar written next to task files.
  static nlohmann::ordered_json manifest();
};

using TokenSeq = std::vector<Token>;

std::string render(std::span<const Token> tokens);
// Greedy glyph tokenizer; nullopt on any unknown character sequence.
std::optional<TokenSeq> tokenize(std::string_view text);

enum class Variant : std::uint8_t { OS, OO, ORS, ROS, MultiHorizon };

std::string_view variant_name(Variant variant);  // "os", "oo", "ors", "ros", "multi"
Variant parse_variant(std::string_view name);

// Half-open token range of the target, labelled "rule" or "state@<h>".
struct TargetSpan {
  std::string label;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TaskSample {
  std::uint64_t instance_id = 0;
  Variant variant = Variant::OS;
  int k = 1;
  TokenSeq input;
  TokenSeq target;
  std::vector<TargetSpan> spans;

  // input followed by target, as one line of glyphs.
  std::string raw() const;
};

struct EmitOptions {
  int context_len = 10;
  // Append one <mask> per target token after <gen>.
  bool mask_slots = false;
};

TaskSample emit(const Instance& instance, Variant variant, int k, const EmitOptions& options = {});
TaskSample emit_multi_horizon(const Instance& instance, int k, const EmitOptions& options = {});

struct ParsedPrediction {
  bool ok = false;
  std::string failure;          // set when !ok
  std::vector<CaState> states;  // one per horizon for OO, else one
  std::optional<Rule> rule;     // ORS only
};

// Never throws on malformed content; returns ok == false instead.
ParsedPrediction parse_prediction(std::span<const Token> tokens, Variant variant, int k, int width,
                                  int radius = 2);
ParsedPrediction parse_prediction(std::string_view text, Variant variant, int k, int width, int radius = 2);

// One JSONL record: {"instance_id":..,"variant":..,"k":..,"input":..,"target":..}.
std::string format_task_record(const TaskSample& sample);

}  // namespace cabench
