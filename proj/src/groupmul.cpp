#include "cabench/groupmul.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cabench/digest.hpp"
#include "cabench/error.hpp"
#include "cabench/io.hpp"
#include "cabench/rng.hpp"
#include "cabench/version.hpp"
#include "parallel.hpp"

namespace cabench {

namespace {

template <std::size_t N>
using Perm = std::array<std::uint8_t, N>;

template <std::size_t N>
bool is_even(const Perm<N>& p) {
  int inversions = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) inversions += p[i] > p[j];
  return inversions % 2 == 0;
}

// Even permutations of N points in lexicographic order of the one-line word.
template <std::size_t N>
std::vector<Perm<N>> alternating_elements() {
  Perm<N> p;
  std::iota(p.begin(), p.end(), std::uint8_t{0});
  std::vector<Perm<N>> out;
  do {
    if (is_even(p)) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

template <std::size_t N>
Perm<N> compose(const Perm<N>& p, const Perm<N>& q) {
  Perm<N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = p[q[i]];
  return r;
}

template <std::size_t N>
std::string perm_name(const Perm<N>& p) {
  std::string s;
  for (auto v : p) s.push_back(static_cast<char>('0' + v));
  return s;
}

template <std::size_t N>
int rank_of(const std::vector<Perm<N>>& elems, const Perm<N>& p) {
  auto it = std::lower_bound(elems.begin(), elems.end(), p);
  return static_cast<int>(it - elems.begin());
}

GroupSpec cyclic60() {
  GroupSpec g;
  g.name = "Z60";
  g.order = 60;
  g.identity = 0;
  for (int a = 0; a < 60; ++a) g.elements.push_back(std::to_string(a));
  g.table.resize(60 * 60);
  for (int a = 0; a < 60; ++a)
    for (int b = 0; b < 60; ++b) g.table[a * 60 + b] = static_cast<std::uint8_t>((a + b) % 60);
  return g;
}

GroupSpec a4_times_z5() {
  const auto a4 = alternating_elements<4>();
  GroupSpec g;
  g.name = "A4xZ5";
  g.order = 60;
  g.identity = 0;  // rank 0 is the identity word 0123, residue 0
  for (const auto& p : a4)
    for (int z = 0; z < 5; ++z) g.elements.push_back(perm_name(p) + "|" + std::to_string(z));
  g.table.resize(60 * 60);
  for (int a = 0; a < 60; ++a) {
    for (int b = 0; b < 60; ++b) {
      const int pa = a / 5, za = a % 5, pb = b / 5, zb = b % 5;
      const int pc = rank_of(a4, compose(a4[pa], a4[pb]));
      g.table[a * 60 + b] = static_cast<std::uint8_t>(pc * 5 + (za + zb) % 5);
    }
  }
  return g;
}

GroupSpec alternating5() {
  const auto a5 = alternating_elements<5>();
  GroupSpec g;
  g.name = "A5";
  g.order = 60;
  g.identity = 0;
  for (const auto& p : a5) g.elements.push_back(perm_name(p));
  g.table.resize(60 * 60);
  for (int a = 0; a < 60; ++a)
    for (int b = 0; b < 60; ++b) g.table[a * 60 + b] = static_cast<std::uint8_t>(rank_of(a5, compose(a5[a], a5[b])));
  return g;
}

std::string ids_json(const std::vector<ElementId>& ids) {
  std::string s = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ids[i]);
  }
  return s + "]";
}

std::vector<ElementId> labels_field(std::string_view text, std::size_t line, const std::string& file) {
  try {
    const auto j = nlohmann::json::parse(text);
    return j.at("labels").get<std::vector<ElementId>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("record needs an integer array 'labels': ") + e.what(), line).in_file(file);
  }
}

}  // namespace

ElementId GroupSpec::inverse(ElementId a) const {
  for (ElementId b = 0; b < order; ++b) {
    if (mul(a, b) == identity) return b;
  }
  throw InternalError("element " + std::to_string(a) + " of " + name + " has no inverse");
}

std::string GroupSpec::table_digest() const {
  std::string bytes(table.begin(), table.end());
  return sha256_hex(bytes);
}

std::vector<std::string> group_names() { return {"Z60", "A4xZ5", "A5"}; }

GroupSpec make_group(std::string_view name) {
  if (name == "Z60") return cyclic60();
  if (name == "A4xZ5") return a4_times_z5();
  if (name == "A5") return alternating5();
  throw InvalidInput("unknown group '" + std::string(name) + "' (expected Z60, A4xZ5 or A5)");
}

std::vector<ElementId> prefix_labels(std::span<const ElementId> seq, const GroupSpec& group) {
  std::vector<ElementId> labels;
  labels.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!group.valid(seq[i])) {
      throw RangeError("element id " + std::to_string(seq[i]) + " at position " + std::to_string(i) +
                       " is outside 0.." + std::to_string(group.order - 1));
    }
    labels.push_back(i == 0 ? seq[0] : group.mul(labels.back(), seq[i]));
  }
  return labels;
}

std::vector<GroupSample> sample_groupmul(const GroupSpec& group, const GroupDatasetOptions& options) {
  std::vector<GroupSample> out(options.lengths.size() * options.n_per_length);
  for (int len : options.lengths) {
    if (len < 1) throw InvalidInput("sequence lengths must be >= 1");
  }
  detail::parallel_ranges(out.size(), options.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t li = i / options.n_per_length;
      const std::uint64_t index = i % options.n_per_length;
      const int len = options.lengths[li];
      CounterRng rng(stream_key(options.seed, 0x1000 + static_cast<std::uint64_t>(len), index));
      GroupSample& s = out[i];
      s.seq.resize(len);
      for (auto& g : s.seq) g = static_cast<ElementId>(rng.below(static_cast<std::uint64_t>(group.order)));
      s.labels = prefix_labels(s.seq, group);
    }
  });
  return out;
}

std::string format_group_sample(const GroupSpec& group, const GroupSample& sample) {
  return "{\"group\":\"" + group.name + "\",\"seq\":" + ids_json(sample.seq) + ",\"labels\":" +
         ids_json(sample.labels) + "}";
}

GroupDatasetInfo generate_groupmul_dataset(const GroupSpec& group, const GroupDatasetOptions& options,
                                           const std::filesystem::path& out_dir, const std::string& subcommand) {
  const auto samples = sample_groupmul(group, options);
  ensure_directory(out_dir);
  GroupDatasetInfo info;
  info.samples_path = "samples.jsonl";
  info.records = samples.size();
  std::string text;
  for (const auto& s : samples) {
    text += format_group_sample(group, s);
    text += '\n';
  }
  write_text_file(out_dir / info.samples_path, text);
  info.sha256 = sha256_hex(text);
  info.manifest = {
      {"format", "cabench-groupmul/1"},
      {"group", group.name},
      {"order", group.order},
      {"identity", group.identity},
      {"id_scheme",
       group.name == "Z60"     ? "residue"
       : group.name == "A4xZ5" ? "a_rank*5+z; a_rank = lexicographic rank of even permutation word of 0123"
                               : "lexicographic rank of even permutation word of 01234"},
      {"composition", "(p*q)(i) = p(q(i))"},
      {"orientation", "left-fold: labels[i] = labels[i-1] * seq[i]"},
      {"elements", group.elements},
      {"table_sha256", group.table_digest()},
      {"lengths", options.lengths},
      {"n_per_length", options.n_per_length},
      {"rng", kRngAlgorithm},
      {"files", {{"samples", {{"path", info.samples_path}, {"records", info.records}, {"sha256", info.sha256}}}}},
      {"run", {{"subcommand", subcommand}, {"seed", options.seed}, {"tool_version", kVersion}}}};
  write_json_file(out_dir / "manifest.json", info.manifest);
  return info;
}

nlohmann::ordered_json GroupScoreReport::to_json() const {
  auto row_json = [](const GroupScoreRow& r) {
    return nlohmann::ordered_json{{"length", r.length},
                                  {"sequences", r.sequences},
                                  {"positions", r.positions},
                                  {"position_accuracy", r.position_accuracy},
                                  {"sequence_accuracy", r.sequence_accuracy},
                                  {"pass", r.pass}};
  };
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) rows_json.push_back(row_json(r));
  return {{"kind", "groupmul-score"},
          {"threshold", threshold},
          {"threshold_applies_to", "position_accuracy"},
          {"rows", rows_json},
          {"overall", row_json(overall)}};
}

std::string GroupScoreReport::table() const {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "group multiplication score  threshold=%.2f (per position)\n", threshold);
  os << buf << "length  sequences  pos_acc  seq_acc  pass\n";
  auto line = [&](const GroupScoreRow& r, const char* label) {
    std::snprintf(buf, sizeof buf, "%6s  %9llu  %7.4f  %7.4f  %s\n", label,
                  static_cast<unsigned long long>(r.sequences), r.position_accuracy, r.sequence_accuracy,
                  r.pass ? "yes" : "no");
    os << buf;
  };
  for (const auto& r : rows) line(r, std::to_string(r.length).c_str());
  line(overall, "all");
  return os.str();
}

GroupScoreReport score_groupmul(std::span<const std::vector<ElementId>> predicted,
                                std::span<const std::vector<ElementId>> gold, double threshold) {
  if (predicted.size() != gold.size()) {
    throw AlignmentError("prediction count " + std::to_string(predicted.size()) + " != gold count " +
                         std::to_string(gold.size()));
  }
  std::map<int, GroupScoreRow> by_length;
  GroupScoreReport report;
  report.threshold = threshold;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) {
      throw AlignmentError("record " + std::to_string(i + 1) + ": predicted length " +
                           std::to_string(predicted[i].size()) + " != gold length " + std::to_string(gold[i].size()));
    }
    const int len = static_cast<int>(gold[i].size());
    std::uint64_t correct = 0;
    for (std::size_t p = 0; p < gold[i].size(); ++p) correct += predicted[i][p] == gold[i][p];
    for (GroupScoreRow* row : {&by_length[len], &report.overall}) {
      ++row->sequences;
      row->positions += len;
      row->correct_positions += correct;
      row->correct_sequences += correct == static_cast<std::uint64_t>(len);
    }
    by_length[len].length = len;
  }
  auto finish = [threshold](GroupScoreRow& r) {
    r.position_accuracy = r.positions ? static_cast<double>(r.correct_positions) / r.positions : 0.0;
    r.sequence_accuracy = r.sequences ? static_cast<double>(r.correct_sequences) / r.sequences : 0.0;
    r.pass = r.positions > 0 && r.position_accuracy >= threshold;
  };
  for (auto& [len, row] : by_length) {
    finish(row);
    report.rows.push_back(row);
  }
  finish(report.overall);
  return report;
}

GroupScoreReport score_groupmul(const std::filesystem::path& pred_file, const std::filesystem::path& gold_file,
                                double threshold) {
  std::vector<std::vector<ElementId>> pred, gold;
  for_each_line(pred_file, [&](std::string_view t, std::size_t l) { pred.push_back(labels_field(t, l, pred_file.string())); });
  for_each_line(gold_file, [&](std::string_view t, std::size_t l) { gold.push_back(labels_field(t, l, gold_file.string())); });
  return score_groupmul(pred, gold, threshold);
}

}  // namespace cabench
