#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "cabench/ca.hpp"
#include "cabench/datagen.hpp"
#include "cabench/tasks.hpp"

namespace cabench {

// Neighborhood -> output mapping observed in an orbit prefix; unknown
// entries were never observed.
class PartialRule {
public:
  explicit PartialRule(int radius = 2);

  int radius() const noexcept { return radius_; }
  int size() const noexcept { return static_cast<int>(entries_.size()); }
  bool known(int neighborhood) const noexcept { return entries_[neighborhood] >= 0; }
  // Precondition: known(neighborhood).
  bool value(int neighborhood) const noexcept { return entries_[neighborhood] == 1; }
  std::uint32_t observations(int neighborhood) const noexcept { return counts_[neighborhood]; }
  int known_count() const noexcept;

  // Throws InconsistentOrbit when `output` contradicts an earlier observation.
  void observe(int neighborhood, bool output);

  static PartialRule from_rule(const Rule& rule);
  // Unknown entries filled with `fill`.
  Rule completed(bool fill = false) const;

private:
  int radius_;
  std::vector<std::int8_t> entries_;  // -1 unknown, else 0/1
  std::vector<std::uint32_t> counts_;
};

PartialRule induce_partial_rule(std::span<const CaState> states, int radius = 2);

struct OraclePrediction {
  std::vector<CaState> states;           // horizon h at index h-1
  std::vector<std::uint64_t> determined;  // per-horizon cell mask
  std::vector<bool> fully_determined;
};

// Iterates the partial rule from `last_state` for k horizons. A cell is
// determined iff its contributing cells one horizon earlier are all
// determined and the resulting neighborhood entry is known. Undetermined
// cells take value 0.
OraclePrediction predict(const PartialRule& partial, const CaState& last_state, int k);

// Exact analysis over every completion of the unknown entries that the
// k-step computation actually reads. Completions are equally likely under a
// uniform prior on rules.
struct CompletionAnalysis {
  bool capped = false;                    // leaf budget exhausted; other fields empty
  std::uint64_t leaves = 0;
  std::vector<std::uint64_t> determined;  // cells equal across all completions
  std::vector<double> best_probability;   // max posterior mass of a single state
  std::vector<CaState> best_state;
};

CompletionAnalysis analyze_completions(const PartialRule& partial, const CaState& last_state, int k,
                                       std::uint64_t max_leaves = 1u << 16);

struct CeilingRow {
  int k = 1;
  std::uint64_t instances = 0;
  double strict = 0;    // fraction with the target fully determined by propagation
  double exact = 0;     // fraction with the target forced under every completion
  double realized = 0;  // exact match of the zero-filled oracle prediction
  double bayes = 0;     // expected exact match of the best single guess
  std::uint64_t capped = 0;  // instances where completion enumeration hit its budget
};

struct CeilingReport {
  Variant variant = Variant::OS;
  int context_len = 10;
  std::uint64_t instances = 0;
  std::vector<CeilingRow> rows;
  // Rule-bit statistics over the context (O-RS ceiling).
  double rule_bits_observable = 0;        // mean fraction of known entries
  double rule_bit_accuracy_default0 = 0;  // unknown entries predicted 0

  const CeilingRow* row(int k) const;
  nlohmann::ordered_json to_json() const;
  static CeilingReport from_json(const nlohmann::json& j);
  std::string table() const;
};

struct CeilingOptions {
  int context_len = 10;
  int k_max = 4;
  unsigned workers = 1;
  std::uint64_t max_leaves = 1u << 16;
};

CeilingReport ceiling_report(std::span<const Instance> instances, Variant variant, const CeilingOptions& options);
CeilingReport ceiling_report(const std::filesystem::path& dataset_file, Variant variant,
                             const CeilingOptions& options, int radius = 2);

// Oracle predictions serialized as model predictions for `variant`/k.
// Undetermined state cells become <mask> when `mask_undetermined`, else '0';
// unknown rule entries (O-RS) are always '0'.
std::string oracle_prediction_text(const Instance& instance, Variant variant, int k, int context_len,
                                   bool mask_undetermined);

}  // namespace cabench
