#include "cabench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "cabench/error.hpp"
#include "cabench/io.hpp"

namespace cabench {

namespace {

constexpr std::size_t kMaxListedExclusions = 50;

using Key = std::tuple<std::uint64_t, Variant, int>;
using CellKey = std::tuple<Variant, int, int>;

std::vector<std::string> split_segments(std::string_view text) {
  std::vector<std::string> out;
  constexpr std::string_view sep = "<sep>";
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(sep, pos);
    if (next == std::string_view::npos) {
      out.emplace_back(text.substr(pos));
      return out;
    }
    out.emplace_back(text.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

bool is_bits(std::string_view s) { return !s.empty() && s.find_first_not_of("01") == std::string_view::npos; }

std::size_t expected_segments(Variant v, int k) {
  return v == Variant::OO ? static_cast<std::size_t>(k) : v == Variant::ORS ? 2 : 1;
}

template <class T>
T get_field(const nlohmann::json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'", line);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad type for '") + name + "': " + e.what(), line);
  }
}

nlohmann::json parse_object(std::string_view text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line);
  }
  if (!j.is_object()) throw ParseError("record must be an object", line);
  return j;
}

Variant variant_field(const nlohmann::json& j, std::size_t line) {
  try {
    return parse_variant(get_field<std::string>(j, "variant", line));
  } catch (const InvalidInput& e) {
    throw ParseError(e.what(), line);
  }
}

struct Accumulator {
  std::uint64_t n = 0, correct = 0, parse_failures = 0;
  std::uint64_t rule_n = 0, rule_mismatch = 0, rule_bits_total = 0;
  std::uint64_t rule_correct = 0, rule_correct_sq = 0;
};

const char* name_of(Variant v) {
  switch (v) {
    case Variant::OS: return "os";
    case Variant::OO: return "oo";
    case Variant::ORS: return "ors";
    case Variant::ROS: return "ros";
    case Variant::MultiHorizon: return "multi";
  }
  return "?";
}

bool state_ceilings_shared(Variant a, Variant b) {
  return a == b || (a != Variant::ROS && b != Variant::ROS);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace

GoldRecord parse_gold_record(std::string_view text, std::size_t line) {
  const auto j = parse_object(text, line);
  GoldRecord g;
  g.instance_id = get_field<std::uint64_t>(j, "instance_id", line);
  g.variant = variant_field(j, line);
  g.k = get_field<int>(j, "k", line);
  g.input = get_field<std::string>(j, "input", line);
  g.target = get_field<std::string>(j, "target", line);
  const auto segs = split_segments(g.target);
  if (segs.size() != expected_segments(g.variant, g.k) ||
      !std::all_of(segs.begin(), segs.end(), [](const std::string& s) { return is_bits(s); })) {
    throw ParseError("gold target does not match the layout of variant " + std::string(variant_name(g.variant)),
                     line);
  }
  return g;
}

PredictionRecord parse_prediction_record(std::string_view text, std::size_t line) {
  const auto j = parse_object(text, line);
  PredictionRecord p;
  p.instance_id = get_field<std::uint64_t>(j, "instance_id", line);
  p.variant = variant_field(j, line);
  p.k = get_field<int>(j, "k", line);
  p.tokens = get_field<std::string>(j, "tokens", line);
  if (j.contains("mode")) p.mode = get_field<std::string>(j, "mode", line);
  return p;
}

std::string format_prediction_record(const PredictionRecord& record) {
  nlohmann::ordered_json j{{"instance_id", record.instance_id},
                           {"variant", variant_name(record.variant)},
                           {"k", record.k},
                           {"tokens", record.tokens}};
  if (!record.mode.empty()) j["mode"] = record.mode;
  return j.dump();
}

std::vector<GoldRecord> load_gold(const std::filesystem::path& path) {
  std::vector<GoldRecord> out;
  try {
    for_each_line(path, [&](std::string_view t, std::size_t l) { out.push_back(parse_gold_record(t, l)); });
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  try {
    for_each_line(path, [&](std::string_view t, std::size_t l) { out.push_back(parse_prediction_record(t, l)); });
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
  return out;
}

int exact_match(const CaState& predicted, const CaState& gold) { return predicted == gold ? 1 : 0; }

ExactMatch exact_match(std::string_view predicted_bits, const CaState& gold) {
  if (!is_bits(predicted_bits) || static_cast<int>(predicted_bits.size()) != gold.width()) {
    return {0, true};
  }
  return {exact_match(state_decode(predicted_bits), gold), false};
}

BitAccuracy bit_accuracy(std::string_view predicted_bits, std::string_view gold_bits) {
  if (predicted_bits.size() != gold_bits.size() || gold_bits.empty() || !is_bits(predicted_bits)) {
    return {0.0, true};
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < gold_bits.size(); ++i) agree += predicted_bits[i] == gold_bits[i];
  return {static_cast<double>(agree) / static_cast<double>(gold_bits.size()), false};
}

BitAccuracy bit_accuracy(const Rule& predicted, const Rule& gold) {
  return bit_accuracy(rule_encode(predicted), rule_encode(gold));
}

double depth_score(const std::map<int, double>& accuracy_by_k) {
  double score = 1.0;
  for (int k = 2; k <= 4; ++k) {
    auto it = accuracy_by_k.find(k);
    if (it == accuracy_by_k.end()) {
      throw IncompleteReport("depth score needs accuracy at k=2,3,4; k=" + std::to_string(k) + " is missing");
    }
    score += it->second;
  }
  return score;
}

const CellStats* EvalReport::cell(Variant variant, int k, int horizon) const {
  for (const auto& c : cells) {
    if (c.variant == variant && c.k == k && c.horizon == horizon) return &c;
  }
  return nullptr;
}

EvalReport evaluate(std::span<const PredictionRecord> predictions, std::span<const GoldRecord> gold,
                    const CeilingReport* oracle) {
  std::map<Key, const GoldRecord*> gold_by_key;
  for (const auto& g : gold) {
    if (!gold_by_key.emplace(Key{g.instance_id, g.variant, g.k}, &g).second) {
      throw AlignmentError("gold has duplicate record for instance " + std::to_string(g.instance_id) + " variant " +
                           std::string(variant_name(g.variant)) + " k=" + std::to_string(g.k));
    }
  }

  EvalReport report;
  report.records = predictions.size();
  report.empty = predictions.empty();

  std::map<Key, std::vector<const PredictionRecord*>> by_key;
  for (const auto& p : predictions) by_key[Key{p.instance_id, p.variant, p.k}].push_back(&p);

  auto exclude = [&](const char* why, const Key& key) {
    if (report.excluded.size() < kMaxListedExclusions) {
      report.excluded.push_back(std::string(why) + ": instance " + std::to_string(std::get<0>(key)) + " " +
                                name_of(std::get<1>(key)) + " k=" + std::to_string(std::get<2>(key)));
    }
  };

  std::map<CellKey, Accumulator> acc;
  for (const auto& [key, preds] : by_key) {
    if (preds.size() > 1) {
      report.duplicate_ids += preds.size();
      exclude("duplicate", key);
      continue;
    }
    auto git = gold_by_key.find(key);
    if (git == gold_by_key.end()) {
      ++report.unknown_ids;
      exclude("unknown", key);
      continue;
    }
    const PredictionRecord& pred = *preds.front();
    const GoldRecord& g = *git->second;
    ++report.scored;
    if (!pred.mode.empty()) report.modes.insert(pred.mode);

    const auto gold_segs = split_segments(g.target);
    const auto pred_segs = split_segments(pred.tokens);
    const bool layout_ok = pred_segs.size() == gold_segs.size();
    const std::size_t first_state = g.variant == Variant::ORS ? 1 : 0;

    if (g.variant == Variant::ORS) {
      auto& a = acc[CellKey{g.variant, g.k, g.k}];
      const std::string& gold_rule = gold_segs[0];
      ++a.rule_n;
      a.rule_bits_total += gold_rule.size();
      // Rule is scored whenever the first segment is readable, even if the state is not.
      const BitAccuracy ba = bit_accuracy(pred_segs[0], gold_rule);
      if (ba.length_mismatch) {
        ++a.rule_mismatch;
      } else {
        std::uint64_t agree = 0;
        for (std::size_t i = 0; i < gold_rule.size(); ++i) agree += pred_segs[0][i] == gold_rule[i];
        a.rule_correct += agree;
        a.rule_correct_sq += agree * agree;
      }
    }
    for (std::size_t s = first_state; s < gold_segs.size(); ++s) {
      const int horizon = g.variant == Variant::OO ? static_cast<int>(s) + 1 : g.k;
      auto& a = acc[CellKey{g.variant, g.k, horizon}];
      ++a.n;
      const CaState gold_state = state_decode(gold_segs[s]);
      if (!layout_ok) {
        ++a.parse_failures;
        continue;
      }
      const ExactMatch em = exact_match(pred_segs[s], gold_state);
      a.correct += em.value;
      a.parse_failures += em.parse_failure;
    }
  }

  for (const auto& [key, a] : acc) {
    CellStats c;
    std::tie(c.variant, c.k, c.horizon) = key;
    c.n = a.n;
    c.correct = a.correct;
    c.parse_failures = a.parse_failures;
    if (a.n) {
      c.exact_match = static_cast<double>(a.correct) / static_cast<double>(a.n);
      c.stderr_ = std::sqrt(c.exact_match * (1 - c.exact_match) / static_cast<double>(a.n));
    }
    c.rule_n = a.rule_n;
    c.rule_length_mismatch = a.rule_mismatch;
    if (a.rule_n) {
      const double len = static_cast<double>(a.rule_bits_total) / static_cast<double>(a.rule_n);
      const double n = static_cast<double>(a.rule_n);
      c.rule_bit_accuracy = static_cast<double>(a.rule_correct) / (len * n);
      const double second = static_cast<double>(a.rule_correct_sq) / (len * len * n);
      const double var = std::max(0.0, second - c.rule_bit_accuracy * c.rule_bit_accuracy);
      c.rule_stderr = std::sqrt(var / n);
    }
    if (oracle && state_ceilings_shared(oracle->variant, c.variant)) {
      if (const CeilingRow* row = oracle->row(c.horizon)) {
        c.oracle = OracleColumns{row->strict, row->exact, row->bayes};
        const double n = static_cast<double>(std::max<std::uint64_t>(c.n, 1));
        const double noise = 3.0 * std::sqrt(row->strict * (1 - row->strict) / n) + 1.0 / n;
        if (c.n && c.exact_match > row->strict + noise) {
          c.above_ceiling = true;
          report.warnings.push_back(std::string(name_of(c.variant)) + " k=" + std::to_string(c.k) + " horizon " +
                                    std::to_string(c.horizon) + ": exact match exceeds the oracle strict ceiling");
        }
      }
    }
    report.cells.push_back(c);
  }

  for (Variant v : {Variant::OS, Variant::OO, Variant::ORS, Variant::ROS, Variant::MultiHorizon}) {
    std::map<int, double> by_h;
    for (int h = 2; h <= 4; ++h) {
      const CellStats* best = nullptr;
      for (const auto& c : report.cells) {
        if (c.variant != v || c.horizon != h || c.n == 0) continue;
        // Prefer the prediction made for exactly this look-ahead, else the longest O-O run.
        if (!best || (c.k == h) || (best->k != h && c.k > best->k)) best = &c;
      }
      if (best) by_h[h] = best->exact_match;
    }
    if (by_h.size() == 3) report.depth_scores[v] = depth_score(by_h);
  }

  if (report.duplicate_ids) {
    report.warnings.push_back(std::to_string(report.duplicate_ids) + " prediction records share a key and were excluded");
  }
  if (report.unknown_ids) {
    report.warnings.push_back(std::to_string(report.unknown_ids) + " prediction records have no gold record and were excluded");
  }
  return report;
}

EvalReport evaluate_run(const std::filesystem::path& pred_file, const std::filesystem::path& gold_file,
                        const CeilingReport* oracle) {
  const auto gold = load_gold(gold_file);
  const auto preds = load_predictions(pred_file);
  EvalReport report = evaluate(preds, gold, oracle);
  report.source = pred_file.string();
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json j{{"variant", variant_name(c.variant)},
                             {"k", c.k},
                             {"horizon", c.horizon},
                             {"n", c.n},
                             {"exact_match", c.exact_match},
                             {"stderr", c.stderr_},
                             {"parse_failures", c.parse_failures}};
    if (c.rule_n) {
      j["rule_n"] = c.rule_n;
      j["rule_bit_accuracy"] = c.rule_bit_accuracy;
      j["rule_stderr"] = c.rule_stderr;
      j["rule_length_mismatch"] = c.rule_length_mismatch;
    }
    if (c.oracle) {
      j["oracle"] = {{"strict", c.oracle->strict}, {"exact", c.oracle->exact}, {"bayes", c.oracle->bayes}};
      j["above_ceiling"] = c.above_ceiling;
    }
    cells_json.push_back(j);
  }
  nlohmann::ordered_json depth = nlohmann::ordered_json::object();
  for (const auto& [v, d] : depth_scores) depth[std::string(variant_name(v))] = d;
  return {{"kind", "eval-report"},
          {"source", source},
          {"records", records},
          {"scored", scored},
          {"empty", empty},
          {"unknown_ids", unknown_ids},
          {"duplicate_ids", duplicate_ids},
          {"excluded", excluded},
          {"modes", std::vector<std::string>(modes.begin(), modes.end())},
          {"cells", cells_json},
          {"depth_score", depth},
          {"warnings", warnings}};
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "eval %s  records=%llu scored=%llu unknown=%llu duplicate=%llu%s\n",
                source.empty() ? "-" : source.c_str(), static_cast<unsigned long long>(records),
                static_cast<unsigned long long>(scored), static_cast<unsigned long long>(unknown_ids),
                static_cast<unsigned long long>(duplicate_ids), empty ? "  (empty)" : "");
  os << buf;
  os << "variant  k  h        n    exact   stderr  parse_fail  rule_bits   oracle_strict\n";
  for (const auto& c : cells) {
    char rule[24] = "        -";
    char orc[24] = "            -";
    if (c.rule_n) std::snprintf(rule, sizeof rule, "%9.4f", c.rule_bit_accuracy);
    if (c.oracle) std::snprintf(orc, sizeof orc, "%13.4f", c.oracle->strict);
    std::snprintf(buf, sizeof buf, "%-7s %2d %2d %8llu  %7.4f  %7.4f  %10llu  %s  %s%s\n", name_of(c.variant), c.k,
                  c.horizon, static_cast<unsigned long long>(c.n), c.exact_match, c.stderr_,
                  static_cast<unsigned long long>(c.parse_failures), rule, orc, c.above_ceiling ? "  !" : "");
    os << buf;
  }
  for (const auto& [v, d] : depth_scores) {
    std::snprintf(buf, sizeof buf, "depth score %-5s %.4f\n", name_of(v), d);
    os << buf;
  }
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

AggregateReport aggregate_runs(std::span<const EvalReport> reports) {
  AggregateReport out;
  out.runs = reports.size();
  std::map<CellKey, std::vector<double>> em, rb;
  std::map<Variant, std::vector<double>> depth;
  for (const auto& r : reports) {
    for (const auto& c : r.cells) {
      if (c.n) em[CellKey{c.variant, c.k, c.horizon}].push_back(c.exact_match);
      if (c.rule_n) rb[CellKey{c.variant, c.k, c.horizon}].push_back(c.rule_bit_accuracy);
    }
    for (const auto& [v, d] : r.depth_scores) depth[v].push_back(d);
  }
  auto rows = [](const std::map<CellKey, std::vector<double>>& m) {
    std::vector<AggregateRow> v;
    for (const auto& [key, xs] : m) {
      AggregateRow row;
      std::tie(row.variant, row.k, row.horizon) = key;
      row.runs = xs.size();
      row.mean = mean_of(xs);
      row.std = sample_std(xs);
      v.push_back(row);
    }
    return v;
  };
  out.exact_match = rows(em);
  out.rule_bit_accuracy = rows(rb);
  for (const auto& [v, xs] : depth) out.depth_scores[v] = {mean_of(xs), sample_std(xs)};
  return out;
}

nlohmann::ordered_json AggregateReport::to_json() const {
  auto rows_json = [](const std::vector<AggregateRow>& rows) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      a.push_back({{"variant", variant_name(r.variant)},
                   {"k", r.k},
                   {"horizon", r.horizon},
                   {"runs", r.runs},
                   {"mean", r.mean},
                   {"std", r.std}});
    }
    return a;
  };
  nlohmann::ordered_json depth = nlohmann::ordered_json::object();
  for (const auto& [v, md] : depth_scores) depth[std::string(variant_name(v))] = {{"mean", md.first}, {"std", md.second}};
  return {{"kind", "eval-aggregate"},
          {"runs", runs},
          {"exact_match", rows_json(exact_match)},
          {"rule_bit_accuracy", rows_json(rule_bit_accuracy)},
          {"depth_score", depth}};
}

std::string AggregateReport::table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "aggregate over %zu runs\nvariant  k  h  runs    mean      std\n", runs);
  os << buf;
  for (const auto& r : exact_match) {
    std::snprintf(buf, sizeof buf, "%-7s %2d %2d  %4zu  %7.4f  %7.4f\n", name_of(r.variant), r.k, r.horizon, r.runs,
                  r.mean, r.std);
    os << buf;
  }
  for (const auto& r : rule_bit_accuracy) {
    std::snprintf(buf, sizeof buf, "rule bits %-5s k=%d  %7.4f +- %.4f\n", name_of(r.variant), r.k, r.mean, r.std);
    os << buf;
  }
  for (const auto& [v, md] : depth_scores) {
    std::snprintf(buf, sizeof buf, "depth score %-5s %.4f +- %.4f\n", name_of(v), md.first, md.second);
    os << buf;
  }
  return os.str();
}

}  // namespace cabench
