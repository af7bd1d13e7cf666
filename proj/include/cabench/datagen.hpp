#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <array>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cabench/ca.hpp"
#include "cabench/rng.hpp"

namespace cabench {

enum class Split : std::uint8_t { Train, Test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct DatasetConfig {
  int width = 20;
  int radius = 2;
  int steps = 20;  // T, states per orbit
  int context_len = 10;
  std::uint64_t n_train = 950000;
  std::uint64_t n_test = 100000;
  std::uint64_t master_seed = 0;
  bool dedup_train = false;

  static DatasetConfig paper_preset();

  // Throws InvalidInput when an invariant is violated.
  void validate() const;
  std::uint64_t split_size(Split split) const { return split == Split::Train ? n_train : n_test; }

  nlohmann::ordered_json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
  // SHA-256 of the canonical JSON form; changes iff any field changes.
  std::string digest() const;
};

struct Instance {
  std::uint64_t id = 0;
  Split split = Split::Train;
  Orbit orbit;
};

// Set of rules keyed by their packed lookup table.
class RuleSet {
public:
  bool contains(const Rule& rule) const { return rules_.contains(rule.words()); }
  // Returns false when the rule was already present.
  bool insert(const Rule& rule) { return rules_.insert(rule.words()).second; }
  std::size_t size() const { return rules_.size(); }
  // SHA-256 over the sorted distinct rule strings, one per line.
  std::string digest(int radius) const;

private:
  struct KeyHash {
    std::size_t operator()(const std::array<std::uint64_t, 2>& k) const noexcept;
  };
  std::unordered_set<std::array<std::uint64_t, 2>, KeyHash> rules_;
};

// Deterministic instance generation keyed by (master_seed, split, id).
class InstanceSampler {
public:
  static constexpr int kMaxRejections = 1000;

  explicit InstanceSampler(DatasetConfig config);

  const DatasetConfig& config() const { return config_; }
  const RuleSet& test_rules() const { return test_rules_; }

  // `salt` selects an alternative stream; only the dedup pass uses salt > 0.
  Instance sample(Split split, std::uint64_t id, std::uint64_t salt = 0) const;
  Rule sample_rule(Split split, std::uint64_t id, std::uint64_t salt = 0) const;

private:
  Rule accepted_rule(CounterRng& rng, Split split) const;

  DatasetConfig config_;
  RuleSet test_rules_;  // frozen before any train draw
};

struct SplitFileInfo {
  std::string path;  // relative to the dataset directory
  std::uint64_t records = 0;
  std::string sha256;
};

struct SplitManifest {
  DatasetConfig config;
  SplitFileInfo train;
  SplitFileInfo test;
  std::string test_rule_digest;
  std::uint64_t test_rules_distinct = 0;
  std::uint64_t train_duplicate_rules = 0;  // repeats beyond first occurrence
  std::uint64_t overlap = 0;

  nlohmann::ordered_json to_json() const;
};

struct BuildOptions {
  unsigned workers = 1;
  std::string subcommand = "build_dataset";
};

// Writes train.jsonl, test.jsonl and manifest.json into `out_dir`.
SplitManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                            const BuildOptions& options = {});

// Generates every instance of one split in memory (same values build_dataset persists).
std::vector<Instance> generate_split(const InstanceSampler& sampler, Split split, unsigned workers = 1);

// One JSONL record: {"id":..,"split":..,"rule":..,"states":[..]}.
std::string format_instance(const Instance& instance);
// `line` is only used for error messages.
Instance parse_instance(std::string_view text, int radius = 2, std::size_t line = 0);

struct LoadOptions {
  int radius = 2;
  // Check the step invariant on every `spot_check_stride`-th record; 0 disables.
  std::uint64_t spot_check_stride = 100;
};

std::vector<Instance> load_instances(const std::filesystem::path& path, const LoadOptions& options = {});

struct DisjointResult {
  bool disjoint = true;
  std::uint64_t overlap = 0;  // test records whose rule string occurs in the train file
};

DisjointResult verify_disjoint(const std::filesystem::path& train_file, const std::filesystem::path& test_file);

}  // namespace cabench
