#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cabench {

using ElementId = int;

// Finite group of order 60 given by its full multiplication table.
// Element ids are frozen:
//   Z60    id = residue
//   A4xZ5  id = a_rank * 5 + z, a_rank = lexicographic rank among even
//          permutations of {0,1,2,3} in one-line notation
//   A5     id = lexicographic rank among even permutations of {0,..,4}
// Permutations compose as functions: (p*q)(i) = p(q(i)).
struct GroupSpec {
  std::string name;
  int order = 0;
  ElementId identity = 0;
  std::vector<std::string> elements;  // printable names indexed by id
  std::vector<std::uint8_t> table;    // order x order, row-major: table[a*order+b] = a*b

  ElementId mul(ElementId a, ElementId b) const { return table[static_cast<std::size_t>(a) * order + b]; }
  ElementId inverse(ElementId a) const;
  bool valid(ElementId a) const { return a >= 0 && a < order; }
  std::string table_digest() const;
};

GroupSpec make_group(std::string_view name);  // "Z60", "A4xZ5", "A5"
std::vector<std::string> group_names();

// labels[0] = seq[0], labels[i] = labels[i-1] * seq[i].
std::vector<ElementId> prefix_labels(std::span<const ElementId> seq, const GroupSpec& group);

struct GroupSample {
  std::vector<ElementId> seq;
  std::vector<ElementId> labels;
};

struct GroupDatasetOptions {
  std::vector<int> lengths{5, 10, 15, 20, 40};
  std::uint64_t n_per_length = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

// Samples ordered by length (as listed), then by index.
std::vector<GroupSample> sample_groupmul(const GroupSpec& group, const GroupDatasetOptions& options);

struct GroupDatasetInfo {
  std::string samples_path;
  std::uint64_t records = 0;
  std::string sha256;
  nlohmann::ordered_json manifest;
};

// Writes samples.jsonl and manifest.json into `out_dir`.
GroupDatasetInfo generate_groupmul_dataset(const GroupSpec& group, const GroupDatasetOptions& options,
                                           const std::filesystem::path& out_dir,
                                           const std::string& subcommand = "generate_groupmul_dataset");

std::string format_group_sample(const GroupSpec& group, const GroupSample& sample);

struct GroupScoreRow {
  int length = 0;
  std::uint64_t sequences = 0;
  std::uint64_t positions = 0;
  std::uint64_t correct_positions = 0;
  std::uint64_t correct_sequences = 0;
  double position_accuracy = 0;
  double sequence_accuracy = 0;
  bool pass = false;  // position_accuracy >= threshold
};

struct GroupScoreReport {
  double threshold = 0.70;
  std::vector<GroupScoreRow> rows;  // ascending length
  GroupScoreRow overall;

  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

// Predicted and gold label sequences must align one-to-one.
GroupScoreReport score_groupmul(std::span<const std::vector<ElementId>> predicted,
                                std::span<const std::vector<ElementId>> gold, double threshold = 0.70);
// Files are JSONL with a "labels" array per line, aligned by line order.
GroupScoreReport score_groupmul(const std::filesystem::path& pred_file, const std::filesystem::path& gold_file,
                                double threshold = 0.70);

}  // namespace cabench
