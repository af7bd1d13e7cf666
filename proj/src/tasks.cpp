#include "cabench/tasks.hpp"

#include <array>

#include "cabench/error.hpp"

namespace cabench {

namespace {

constexpr std::array<std::string_view, kVocabSize> kGlyphs = {
    "0", "1", "<sep>", "<gen>", "<mask>", "<shift_1>", "<shift_2>", "<shift_3>", "<shift_4>"};

void append_bits(TokenSeq& out, std::string_view bits) {
  for (char c : bits) out.push_back(c == '1' ? Token::One : Token::Zero);
}

void append_state(TokenSeq& out, const CaState& state) { append_bits(out, state_encode(state)); }

void append_context(TokenSeq& out, const std::vector<CaState>& states, int context_len) {
  for (int t = 0; t < context_len; ++t) {
    if (t) out.push_back(Token::Sep);
    append_state(out, states[t]);
  }
}

void check_horizon(const Instance& instance, int k, const EmitOptions& options) {
  const int steps = static_cast<int>(instance.orbit.states.size());
  if (options.context_len < 1) throw RangeError("context_len must be >= 1");
  if (k < 1) throw RangeError("look-ahead k must be >= 1, got " + std::to_string(k));
  if (options.context_len + k > steps) {
    throw RangeError("context_len + k = " + std::to_string(options.context_len + k) +
                     " exceeds the orbit length " + std::to_string(steps) + " of instance " +
                     std::to_string(instance.id));
  }
}

void add_state_target(TaskSample& sample, const CaState& state, int horizon) {
  const std::size_t begin = sample.target.size();
  append_state(sample.target, state);
  sample.spans.push_back({"state@" + std::to_string(horizon), begin, sample.target.size()});
}

void finish(TaskSample& sample, const EmitOptions& options) {
  if (options.mask_slots) sample.input.insert(sample.input.end(), sample.target.size(), Token::Mask);
}

ParsedPrediction fail(std::string why) {
  ParsedPrediction p;
  p.failure = std::move(why);
  return p;
}

}  // namespace

std::string_view Vocab::glyph(Token token) { return kGlyphs[static_cast<std::size_t>(token)]; }

std::optional<Token> Vocab::from_glyph(std::string_view glyph) {
  for (std::size_t i = 0; i < kGlyphs.size(); ++i) {
    if (kGlyphs[i] == glyph) return static_cast<Token>(i);
  }
  return std::nullopt;
}

Token Vocab::shift(int k) {
  if (k < 1 || k > 4) throw RangeError("shift token index must be in 1..4, got " + std::to_string(k));
  return static_cast<Token>(static_cast<int>(Token::Shift1) + k - 1);
}

nlohmann::ordered_json Vocab::manifest() {
  nlohmann::ordered_json tokens;
  for (std::size_t i = 0; i < kGlyphs.size(); ++i) tokens[std::string(kGlyphs[i])] = i;
  return {{"tokens", tokens}};
}

std::string render(std::span<const Token> tokens) {
  std::string out;
  out.reserve(tokens.size() + 8);
  for (Token t : tokens) out += Vocab::glyph(t);
  return out;
}

std::optional<TokenSeq> tokenize(std::string_view text) {
  TokenSeq out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '0' || text[i] == '1') {
      out.push_back(text[i] == '1' ? Token::One : Token::Zero);
      ++i;
      continue;
    }
    if (text[i] != '<') return std::nullopt;
    const std::size_t close = text.find('>', i);
    if (close == std::string_view::npos) return std::nullopt;
    auto token = Vocab::from_glyph(text.substr(i, close - i + 1));
    if (!token) return std::nullopt;
    out.push_back(*token);
    i = close + 1;
  }
  return out;
}

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::OS: return "os";
    case Variant::OO: return "oo";
    case Variant::ORS: return "ors";
    case Variant::ROS: return "ros";
    case Variant::MultiHorizon: return "multi";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::OS, Variant::OO, Variant::ORS, Variant::ROS, Variant::MultiHorizon}) {
    if (variant_name(v) == name) return v;
  }
  throw InvalidInput("unknown variant '" + std::string(name) + "' (expected os, oo, ors, ros or multi)");
}

std::string TaskSample::raw() const { return render(input) + render(target); }

TaskSample emit(const Instance& instance, Variant variant, int k, const EmitOptions& options) {
  if (variant == Variant::MultiHorizon) return emit_multi_horizon(instance, k, options);
  check_horizon(instance, k, options);
  const auto& states = instance.orbit.states;
  const int c = options.context_len;

  TaskSample sample;
  sample.instance_id = instance.id;
  sample.variant = variant;
  sample.k = k;
  if (variant == Variant::ROS) {
    append_bits(sample.input, rule_encode(instance.orbit.rule));
    sample.input.push_back(Token::Sep);
  }
  append_context(sample.input, states, c);
  sample.input.push_back(Token::Gen);

  // states are 1-based in the task description: state_{c+k} is states[c+k-1].
  switch (variant) {
    case Variant::OS:
    case Variant::ROS:
      add_state_target(sample, states[c + k - 1], k);
      break;
    case Variant::OO:
      for (int h = 1; h <= k; ++h) {
        if (h > 1) sample.target.push_back(Token::Sep);
        add_state_target(sample, states[c + h - 1], h);
      }
      break;
    case Variant::ORS: {
      append_bits(sample.target, rule_encode(instance.orbit.rule));
      sample.spans.push_back({"rule", 0, sample.target.size()});
      sample.target.push_back(Token::Sep);
      add_state_target(sample, states[c + k - 1], k);
      break;
    }
    case Variant::MultiHorizon:
      break;
  }
  finish(sample, options);
  return sample;
}

TaskSample emit_multi_horizon(const Instance& instance, int k, const EmitOptions& options) {
  if (k < 1 || k > 4) throw RangeError("multi-horizon shift k must be in 1..4, got " + std::to_string(k));
  check_horizon(instance, k, options);
  const auto& states = instance.orbit.states;
  const int c = options.context_len;

  TaskSample sample;
  sample.instance_id = instance.id;
  sample.variant = Variant::MultiHorizon;
  sample.k = k;
  append_context(sample.input, states, c);
  sample.input.push_back(Vocab::shift(k));
  sample.input.push_back(Token::Gen);
  add_state_target(sample, states[c + k - 1], k);
  finish(sample, options);
  return sample;
}

ParsedPrediction parse_prediction(std::span<const Token> tokens, Variant variant, int k, int width, int radius) {
  std::vector<std::string> segments(1);
  for (Token t : tokens) {
    if (t == Token::Sep) {
      segments.emplace_back();
    } else if (t == Token::Zero || t == Token::One) {
      segments.back().push_back(t == Token::One ? '1' : '0');
    } else {
      return fail("unexpected token " + std::string(Vocab::glyph(t)));
    }
  }
  const std::size_t expected = variant == Variant::OO ? static_cast<std::size_t>(k) : variant == Variant::ORS ? 2 : 1;
  if (segments.size() != expected) {
    return fail("expected " + std::to_string(expected) + " segment(s), got " + std::to_string(segments.size()));
  }

  ParsedPrediction out;
  std::size_t first_state = 0;
  if (variant == Variant::ORS) {
    if (static_cast<int>(segments[0].size()) != neighborhood_count(radius)) {
      return fail("rule has " + std::to_string(segments[0].size()) + " bits, expected " +
                  std::to_string(neighborhood_count(radius)));
    }
    out.rule = rule_decode(segments[0], radius);
    first_state = 1;
  }
  for (std::size_t s = first_state; s < segments.size(); ++s) {
    if (static_cast<int>(segments[s].size()) != width) {
      return fail("state has " + std::to_string(segments[s].size()) + " bits, expected " + std::to_string(width));
    }
    out.states.push_back(state_decode(segments[s]));
  }
  out.ok = true;
  return out;
}

ParsedPrediction parse_prediction(std::string_view text, Variant variant, int k, int width, int radius) {
  auto tokens = tokenize(text);
  if (!tokens) return fail("untokenizable text");
  return parse_prediction(*tokens, variant, k, width, radius);
}

std::string format_task_record(const TaskSample& sample) {
  nlohmann::ordered_json j{{"instance_id", sample.instance_id},
                           {"variant", variant_name(sample.variant)},
                           {"k", sample.k},
                           {"input", render(sample.input)},
                           {"target", render(sample.target)}};
  return j.dump();
}

}  // namespace cabench
