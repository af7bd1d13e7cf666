#include "cabench/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "cabench/error.hpp"
#include "parallel.hpp"

namespace cabench {

namespace {

std::uint64_t full_mask(int width) { return width == 64 ? ~0ull : (1ull << width) - 1; }

// Mask of the 2r+1 cells feeding cell w.
std::uint64_t window_mask(int w, int radius, int width) {
  std::uint64_t m = 0;
  for (int j = -radius; j <= radius; ++j) m |= 1ull << (((w + j) % width + width) % width);
  return m;
}

class CompletionWalker {
public:
  CompletionWalker(const PartialRule& partial, int k, int width, std::uint64_t max_leaves)
      : radius_(partial.radius()), width_(width), k_(k), max_leaves_(max_leaves), path_(k), mass_(k),
        all_and_(k, ~0ull), all_or_(k, 0) {
    assign_.resize(partial.size());
    for (int n = 0; n < partial.size(); ++n) assign_[n] = partial.known(n) ? partial.value(n) : -1;
  }

  CompletionAnalysis run(const CaState& start) {
    fill(0, start, 0, 0, 1.0);
    CompletionAnalysis out;
    out.leaves = leaves_;
    if (capped_) {
      out.capped = true;
      return out;
    }
    for (int h = 0; h < k_; ++h) {
      out.determined.push_back(~(all_and_[h] ^ all_or_[h]) & full_mask(width_));
      auto best = std::max_element(mass_[h].begin(), mass_[h].end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
      out.best_probability.push_back(best->second);
      out.best_state.emplace_back(width_, best->first);
    }
    return out;
  }

private:
  void fill(int h, const CaState& cur, int w, std::uint64_t out, double weight) {
    if (capped_) return;
    if (w == width_) {
      path_[h] = out;
      if (h + 1 == k_) {
        leaf(weight);
      } else {
        fill(h + 1, CaState(width_, out), 0, 0, weight);
      }
      return;
    }
    const int n = neighborhood_index(cur, w, radius_);
    if (assign_[n] >= 0) {
      fill(h, cur, w + 1, out | (static_cast<std::uint64_t>(assign_[n]) << w), weight);
      return;
    }
    for (std::int8_t v : {0, 1}) {
      assign_[n] = v;
      fill(h, cur, w + 1, out | (static_cast<std::uint64_t>(v) << w), weight * 0.5);
    }
    assign_[n] = -1;
  }

  void leaf(double weight) {
    if (++leaves_ > max_leaves_) {
      capped_ = true;
      return;
    }
    for (int h = 0; h < k_; ++h) {
      mass_[h][path_[h]] += weight;
      all_and_[h] &= path_[h];
      all_or_[h] |= path_[h];
    }
  }

  int radius_, width_, k_;
  std::uint64_t max_leaves_;
  std::vector<std::int8_t> assign_;
  std::vector<std::uint64_t> path_;
  std::vector<std::unordered_map<std::uint64_t, double>> mass_;
  std::vector<std::uint64_t> all_and_, all_or_;
  std::uint64_t leaves_ = 0;
  bool capped_ = false;
};

struct InstanceCeiling {
  std::vector<std::uint8_t> strict, exact, realized;
  std::vector<double> bayes;
  std::vector<std::uint8_t> capped;
  double observable = 0, default0 = 0;
};

}  // namespace

PartialRule::PartialRule(int radius)
    : radius_(radius), entries_(neighborhood_count(radius), -1), counts_(neighborhood_count(radius), 0) {
  if (radius < 1 || radius > kMaxRadius) throw InvalidInput("radius must be in 1..3");
}

int PartialRule::known_count() const noexcept {
  return static_cast<int>(std::count_if(entries_.begin(), entries_.end(), [](std::int8_t e) { return e >= 0; }));
}

void PartialRule::observe(int neighborhood, bool output) {
  auto& e = entries_[neighborhood];
  if (e >= 0 && e != static_cast<std::int8_t>(output)) {
    throw InconsistentOrbit("neighborhood " + std::to_string(neighborhood) + " observed mapping to both 0 and 1");
  }
  e = static_cast<std::int8_t>(output);
  ++counts_[neighborhood];
}

PartialRule PartialRule::from_rule(const Rule& rule) {
  PartialRule p(rule.radius());
  for (int n = 0; n < rule.size(); ++n) p.entries_[n] = static_cast<std::int8_t>(rule.bit(n));
  return p;
}

Rule PartialRule::completed(bool fill) const {
  Rule rule(radius_);
  for (int n = 0; n < size(); ++n) rule.set(n, known(n) ? value(n) : fill);
  return rule;
}

PartialRule induce_partial_rule(std::span<const CaState> states, int radius) {
  if (states.empty()) throw InvalidInput("cannot induce a rule from an empty orbit prefix");
  PartialRule partial(radius);
  const int width = states.front().width();
  if (width < 2 * radius + 1) throw InvalidInput("state width is smaller than the neighborhood");
  for (std::size_t t = 0; t + 1 < states.size(); ++t) {
    if (states[t + 1].width() != width || states[t].width() != width) {
      throw InvalidInput("orbit prefix mixes state widths");
    }
    for (int w = 0; w < width; ++w) {
      partial.observe(neighborhood_index(states[t], w, radius), states[t + 1].cell(w));
    }
  }
  return partial;
}

OraclePrediction predict(const PartialRule& partial, const CaState& last_state, int k) {
  if (k < 1) throw RangeError("look-ahead k must be >= 1");
  const int width = last_state.width();
  const int r = partial.radius();
  if (width < 2 * r + 1) throw InvalidInput("state width is smaller than the neighborhood");

  OraclePrediction out;
  CaState cur = last_state;
  std::uint64_t det = full_mask(width);
  for (int h = 1; h <= k; ++h) {
    CaState next(width, 0);
    std::uint64_t next_det = 0;
    for (int w = 0; w < width; ++w) {
      const std::uint64_t window = window_mask(w, r, width);
      const int n = neighborhood_index(cur, w, r);
      if ((det & window) == window && partial.known(n)) {
        next_det |= 1ull << w;
        next.set(w, partial.value(n));
      }
    }
    cur = next;
    det = next_det;
    out.states.push_back(cur);
    out.determined.push_back(det);
    out.fully_determined.push_back(det == full_mask(width));
  }
  return out;
}

CompletionAnalysis analyze_completions(const PartialRule& partial, const CaState& last_state, int k,
                                       std::uint64_t max_leaves) {
  if (k < 1) throw RangeError("look-ahead k must be >= 1");
  if (last_state.width() < 2 * partial.radius() + 1) throw InvalidInput("state width is smaller than the neighborhood");
  return CompletionWalker(partial, k, last_state.width(), max_leaves).run(last_state);
}

const CeilingRow* CeilingReport::row(int k) const {
  for (const auto& r : rows) {
    if (r.k == k) return &r;
  }
  return nullptr;
}

nlohmann::ordered_json CeilingReport::to_json() const {
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"k", r.k},
                         {"instances", r.instances},
                         {"strict", r.strict},
                         {"exact", r.exact},
                         {"realized", r.realized},
                         {"bayes", r.bayes},
                         {"capped", r.capped}});
  }
  return {{"kind", "oracle-ceiling"},
          {"variant", variant_name(variant)},
          {"context_len", context_len},
          {"instances", instances},
          {"rows", rows_json},
          {"rule_bits_observable", rule_bits_observable},
          {"rule_bit_accuracy_default0", rule_bit_accuracy_default0}};
}

CeilingReport CeilingReport::from_json(const nlohmann::json& j) {
  CeilingReport r;
  try {
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.context_len = j.at("context_len").get<int>();
    r.instances = j.at("instances").get<std::uint64_t>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("k").get<int>(), row.at("instances").get<std::uint64_t>(),
                        row.at("strict").get<double>(), row.at("exact").get<double>(),
                        row.at("realized").get<double>(), row.at("bayes").get<double>(),
                        row.value("capped", std::uint64_t{0})});
    }
    r.rule_bits_observable = j.at("rule_bits_observable").get<double>();
    r.rule_bit_accuracy_default0 = j.at("rule_bit_accuracy_default0").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ceiling report: ") + e.what());
  }
  return r;
}

std::string CeilingReport::table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "oracle ceiling  variant=%s  context=%d  instances=%llu\n",
                std::string(variant_name(variant)).c_str(), context_len,
                static_cast<unsigned long long>(instances));
  os << buf;
  os << "  k    strict     exact  realized     bayes  capped\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%3d  %8.4f  %8.4f  %8.4f  %8.4f  %6llu\n", r.k, r.strict, r.exact, r.realized,
                  r.bayes, static_cast<unsigned long long>(r.capped));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "rule bits observable %.4f  rule bit accuracy (unknown->0) %.4f\n",
                rule_bits_observable, rule_bit_accuracy_default0);
  os << buf;
  return os.str();
}

CeilingReport ceiling_report(std::span<const Instance> instances, Variant variant, const CeilingOptions& options) {
  const int c = options.context_len;
  const int k_max = options.k_max;
  if (c < 1) throw InvalidInput("context_len must be >= 1");
  if (k_max < 1) throw InvalidInput("k_max must be >= 1");

  std::vector<InstanceCeiling> per(instances.size());
  detail::parallel_ranges(instances.size(), options.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Instance& inst = instances[i];
      const auto& states = inst.orbit.states;
      if (static_cast<int>(states.size()) < c + k_max) {
        throw RangeError("instance " + std::to_string(inst.id) + " has " + std::to_string(states.size()) +
                         " states; context + k_max needs " + std::to_string(c + k_max));
      }
      const Rule& truth = inst.orbit.rule;
      const PartialRule partial =
          variant == Variant::ROS ? PartialRule::from_rule(truth)
                                  : induce_partial_rule(std::span(states).first(c), truth.radius());
      const CaState& last = states[c - 1];
      const OraclePrediction pred = predict(partial, last, k_max);
      const CompletionAnalysis comp = analyze_completions(partial, last, k_max, options.max_leaves);
      const std::uint64_t full = full_mask(last.width());

      InstanceCeiling& out = per[i];
      for (int k = 1; k <= k_max; ++k) {
        const bool strict = pred.fully_determined[k - 1];
        out.strict.push_back(strict);
        out.realized.push_back(pred.states[k - 1] == states[c + k - 1]);
        out.capped.push_back(comp.capped);
        if (comp.capped) {
          out.exact.push_back(strict);
          out.bayes.push_back(strict ? 1.0 : 0.0);
        } else {
          out.exact.push_back(comp.determined[k - 1] == full);
          out.bayes.push_back(comp.best_probability[k - 1]);
        }
      }
      int unknown_zero = 0;
      for (int n = 0; n < truth.size(); ++n) unknown_zero += !partial.known(n) && !truth.bit(n);
      out.observable = static_cast<double>(partial.known_count()) / truth.size();
      out.default0 = static_cast<double>(partial.known_count() + unknown_zero) / truth.size();
    }
  });

  CeilingReport report;
  report.variant = variant;
  report.context_len = c;
  report.instances = instances.size();
  for (int k = 1; k <= k_max; ++k) report.rows.push_back(CeilingRow{k, instances.size()});
  // Fixed-order reduction keeps the report independent of the worker count.
  for (const auto& p : per) {
    for (int k = 0; k < k_max; ++k) {
      auto& row = report.rows[k];
      row.strict += p.strict[k];
      row.exact += p.exact[k];
      row.realized += p.realized[k];
      row.bayes += p.bayes[k];
      row.capped += p.capped[k];
    }
    report.rule_bits_observable += p.observable;
    report.rule_bit_accuracy_default0 += p.default0;
  }
  if (!per.empty()) {
    const double n = static_cast<double>(per.size());
    for (auto& row : report.rows) {
      row.strict /= n;
      row.exact /= n;
      row.realized /= n;
      row.bayes /= n;
    }
    report.rule_bits_observable /= n;
    report.rule_bit_accuracy_default0 /= n;
  }
  return report;
}

CeilingReport ceiling_report(const std::filesystem::path& dataset_file, Variant variant,
                             const CeilingOptions& options, int radius) {
  const auto instances = load_instances(dataset_file, LoadOptions{radius});
  return ceiling_report(instances, variant, options);
}

std::string oracle_prediction_text(const Instance& instance, Variant variant, int k, int context_len,
                                   bool mask_undetermined) {
  const auto& states = instance.orbit.states;
  if (context_len < 1 || context_len > static_cast<int>(states.size())) throw RangeError("context_len out of range");
  const Rule& truth = instance.orbit.rule;
  const PartialRule partial = variant == Variant::ROS
                                  ? PartialRule::from_rule(truth)
                                  : induce_partial_rule(std::span(states).first(context_len), truth.radius());
  const OraclePrediction pred = predict(partial, states[context_len - 1], k);

  auto state_text = [&](int h) {
    std::string s;
    const CaState& st = pred.states[h - 1];
    for (int w = 0; w < st.width(); ++w) {
      const bool det = (pred.determined[h - 1] >> w) & 1u;
      s += det ? (st.cell(w) ? "1" : "0") : (mask_undetermined ? "<mask>" : "0");
    }
    return s;
  };

  std::string out;
  switch (variant) {
    case Variant::OS:
    case Variant::ROS:
    case Variant::MultiHorizon:
      out = state_text(k);
      break;
    case Variant::OO:
      for (int h = 1; h <= k; ++h) {
        if (h > 1) out += "<sep>";
        out += state_text(h);
      }
      break;
    case Variant::ORS:
      for (int n = 0; n < partial.size(); ++n) {
        out += partial.known(n) && partial.value(n) ? "1" : "0";
      }
      out += "<sep>";
      out += state_text(k);
      break;
  }
  return out;
}

}  // namespace cabench
