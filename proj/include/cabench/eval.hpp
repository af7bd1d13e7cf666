#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cabench/ca.hpp"
#include "cabench/oracle.hpp"
#include "cabench/tasks.hpp"

namespace cabench {

// A line of a tokenized-sample file (the gold side of scoring).
struct GoldRecord {
  std::uint64_t instance_id = 0;
  Variant variant = Variant::OS;
  int k = 1;
  std::string input;
  std::string target;
};

// A line of a prediction file. `mode` is an optional free-form label such as
// "teacher_forced" or "free_running".
struct PredictionRecord {
  std::uint64_t instance_id = 0;
  Variant variant = Variant::OS;
  int k = 1;
  std::string tokens;
  std::string mode;
};

GoldRecord parse_gold_record(std::string_view text, std::size_t line = 0);
PredictionRecord parse_prediction_record(std::string_view text, std::size_t line = 0);
std::string format_prediction_record(const PredictionRecord& record);
std::vector<GoldRecord> load_gold(const std::filesystem::path& path);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

struct ExactMatch {
  int value = 0;
  bool parse_failure = false;
};

int exact_match(const CaState& predicted, const CaState& gold);
// Unparseable or wrong-length text scores 0 with the failure flag set.
ExactMatch exact_match(std::string_view predicted_bits, const CaState& gold);

struct BitAccuracy {
  double value = 0;
  bool length_mismatch = false;
};

BitAccuracy bit_accuracy(const Rule& predicted, const Rule& gold);
BitAccuracy bit_accuracy(std::string_view predicted_bits, std::string_view gold_bits);

// 1 + acc(2) + acc(3) + acc(4); throws IncompleteReport when a horizon is missing.
double depth_score(const std::map<int, double>& accuracy_by_k);

struct OracleColumns {
  double strict = 0;
  double exact = 0;
  double bayes = 0;
};

// Scores for one (variant, requested k, scored horizon). Horizon equals k
// except for O-O, where each of the k predicted states is scored separately.
struct CellStats {
  Variant variant = Variant::OS;
  int k = 1;
  int horizon = 1;
  std::uint64_t n = 0;
  std::uint64_t correct = 0;
  std::uint64_t parse_failures = 0;
  double exact_match = 0;
  double stderr_ = 0;
  // O-RS rule bits.
  std::uint64_t rule_n = 0;
  std::uint64_t rule_length_mismatch = 0;
  double rule_bit_accuracy = 0;
  double rule_stderr = 0;
  std::optional<OracleColumns> oracle;
  bool above_ceiling = false;
};

struct EvalReport {
  std::string source;
  std::vector<CellStats> cells;  // sorted by (variant, k, horizon)
  std::map<Variant, double> depth_scores;
  std::uint64_t records = 0;
  std::uint64_t scored = 0;
  std::uint64_t unknown_ids = 0;
  std::uint64_t duplicate_ids = 0;  // prediction records sharing a key; all copies excluded
  std::vector<std::string> excluded;
  std::set<std::string> modes;
  std::vector<std::string> warnings;
  bool empty = true;

  const CellStats* cell(Variant variant, int k, int horizon) const;
  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

EvalReport evaluate(std::span<const PredictionRecord> predictions, std::span<const GoldRecord> gold,
                    const CeilingReport* oracle = nullptr);
EvalReport evaluate_run(const std::filesystem::path& pred_file, const std::filesystem::path& gold_file,
                        const CeilingReport* oracle = nullptr);

// Across-run mean and sample standard deviation (e.g. over training seeds).
struct AggregateRow {
  Variant variant = Variant::OS;
  int k = 1;
  int horizon = 1;
  std::size_t runs = 0;
  double mean = 0;
  double std = 0;
};

struct AggregateReport {
  std::vector<AggregateRow> exact_match;
  std::vector<AggregateRow> rule_bit_accuracy;
  std::map<Variant, std::pair<double, double>> depth_scores;  // mean, std over runs that have one
  std::size_t runs = 0;

  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

AggregateReport aggregate_runs(std::span<const EvalReport> reports);

}  // namespace cabench
