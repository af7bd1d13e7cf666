#include "cabench/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "cabench/digest.hpp"
#include "cabench/error.hpp"
#include "cabench/io.hpp"
#include "cabench/rng.hpp"
#include "cabench/version.hpp"
#include "parallel.hpp"

namespace cabench {

namespace {

std::uint64_t split_domain(Split split) { return split == Split::Train ? 1 : 2; }

Rule draw_rule(CounterRng& rng, int radius) {
  const int n = neighborhood_count(radius);
  if (n <= 64) return Rule::from_word(radius, rng.bits(n));
  Rule rule(radius);
  for (int base = 0; base < n; base += 64) {
    const std::uint64_t w = rng.next();
    for (int i = 0; i < 64 && base + i < n; ++i) rule.set(base + i, (w >> i) & 1u);
  }
  return rule;
}

constexpr std::size_t kChunk = 1 << 15;

// Streams one split to disk in id order; formatting runs on `workers` threads.
SplitFileInfo write_split(const std::filesystem::path& dir, Split split, std::uint64_t count, unsigned workers,
                          const std::function<Instance(std::uint64_t)>& make,
                          const std::function<void(const Instance&)>& observe) {
  SplitFileInfo info;
  info.path = std::string(split_name(split)) + ".jsonl";
  info.records = count;
  const auto path = dir / info.path;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  Sha256 hash;
  std::vector<Instance> batch;
  std::vector<std::string> text(std::max(1u, workers));
  for (std::uint64_t first = 0; first < count; first += kChunk) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, count - first));
    batch.assign(n, Instance{});
    const std::size_t parts = std::min<std::size_t>(text.size(), n);
    detail::parallel_ranges(parts, static_cast<unsigned>(parts), [&](std::size_t pb, std::size_t pe) {
      for (std::size_t p = pb; p < pe; ++p) {
        const std::size_t begin = n * p / parts, end = n * (p + 1) / parts;
        std::string& buf = text[p];
        buf.clear();
        for (std::size_t i = begin; i < end; ++i) {
          batch[i] = make(first + i);
          buf += format_instance(batch[i]);
          buf += '\n';
        }
      }
    });
    for (std::size_t p = 0; p < parts; ++p) {
      out.write(text[p].data(), static_cast<std::streamsize>(text[p].size()));
      hash.update(text[p]);
    }
    for (const auto& inst : batch) observe(inst);
  }
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
  info.sha256 = hash.hex();
  return info;
}

const nlohmann::json& field(const nlohmann::json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'", line);
  return *it;
}

}  // namespace

std::string_view split_name(Split split) { return split == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "test") return Split::Test;
  throw InvalidInput("unknown split '" + std::string(name) + "' (expected train or test)");
}

DatasetConfig DatasetConfig::paper_preset() { return DatasetConfig{}; }

void DatasetConfig::validate() const {
  if (radius < 1 || radius > kMaxRadius) throw InvalidInput("radius must be in 1..3");
  if (width < 2 * radius + 1) throw InvalidInput("width must be >= 2r+1");
  if (width > kMaxWidth) throw InvalidInput("width must be <= 64");
  if (context_len < 1) throw InvalidInput("context_len must be >= 1");
  if (context_len + 4 > steps) throw InvalidInput("context_len + 4 must be <= steps so targets up to k=4 exist");
}

nlohmann::ordered_json DatasetConfig::to_json() const {
  return {{"W", width},           {"r", radius},         {"T", steps},
          {"context_len", context_len}, {"n_train", n_train}, {"n_test", n_test},
          {"master_seed", master_seed}, {"dedup_train", dedup_train}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
  DatasetConfig c;
  try {
    c.width = j.at("W").get<int>();
    c.radius = j.at("r").get<int>();
    c.steps = j.at("T").get<int>();
    c.context_len = j.at("context_len").get<int>();
    c.n_train = j.at("n_train").get<std::uint64_t>();
    c.n_test = j.at("n_test").get<std::uint64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.dedup_train = j.value("dedup_train", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset config: ") + e.what());
  }
  return c;
}

std::string DatasetConfig::digest() const { return sha256_hex(to_json().dump()); }

std::size_t RuleSet::KeyHash::operator()(const std::array<std::uint64_t, 2>& k) const noexcept {
  return static_cast<std::size_t>(splitmix64(k[0] ^ splitmix64(k[1])));
}

std::string RuleSet::digest(int radius) const {
  std::vector<std::string> encoded;
  encoded.reserve(rules_.size());
  for (const auto& words : rules_) {
    Rule rule(radius);
    for (int i = 0; i < rule.size(); ++i) rule.set(i, (words[i >> 6] >> (i & 63)) & 1u);
    encoded.push_back(rule_encode(rule));
  }
  std::sort(encoded.begin(), encoded.end());
  Sha256 h;
  for (const auto& s : encoded) {
    h.update(s);
    h.update("\n");
  }
  return h.hex();
}

InstanceSampler::InstanceSampler(DatasetConfig config) : config_(config) {
  config_.validate();
  for (std::uint64_t id = 0; id < config_.n_test; ++id) test_rules_.insert(sample_rule(Split::Test, id));
}

Rule InstanceSampler::accepted_rule(CounterRng& rng, Split split) const {
  Rule rule = draw_rule(rng, config_.radius);
  if (split == Split::Train) {
    int rejections = 0;
    while (test_rules_.contains(rule)) {
      if (++rejections > kMaxRejections) throw InternalError("train rule rejection cap exceeded");
      rule = draw_rule(rng, config_.radius);
    }
  }
  return rule;
}

Rule InstanceSampler::sample_rule(Split split, std::uint64_t id, std::uint64_t salt) const {
  CounterRng rng(stream_key(config_.master_seed, split_domain(split), id, salt));
  return accepted_rule(rng, split);
}

Instance InstanceSampler::sample(Split split, std::uint64_t id, std::uint64_t salt) const {
  // The initial state is drawn from the same stream, after the accepted rule.
  CounterRng rng(stream_key(config_.master_seed, split_domain(split), id, salt));
  const Rule rule = accepted_rule(rng, split);
  const CaState init(config_.width, rng.bits(config_.width));
  return Instance{id, split, orbit(init, rule, config_.steps)};
}

namespace {

// Salt per train id so that no train rule repeats; assigned sequentially in id order.
std::unordered_map<std::uint64_t, std::uint64_t> dedup_salts(const InstanceSampler& sampler) {
  std::unordered_map<std::uint64_t, std::uint64_t> salts;
  RuleSet seen;
  for (std::uint64_t id = 0; id < sampler.config().n_train; ++id) {
    std::uint64_t salt = 0;
    while (!seen.insert(sampler.sample_rule(Split::Train, id, salt))) {
      if (++salt > static_cast<std::uint64_t>(InstanceSampler::kMaxRejections)) {
        throw InternalError("train dedup rejection cap exceeded");
      }
    }
    if (salt) salts.emplace(id, salt);
  }
  return salts;
}

}  // namespace

std::vector<Instance> generate_split(const InstanceSampler& sampler, Split split, unsigned workers) {
  const std::uint64_t n = sampler.config().split_size(split);
  std::unordered_map<std::uint64_t, std::uint64_t> salts;
  if (split == Split::Train && sampler.config().dedup_train) salts = dedup_salts(sampler);
  std::vector<Instance> out(n);
  detail::parallel_ranges(n, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto it = salts.find(i);
      out[i] = sampler.sample(split, i, it == salts.end() ? 0 : it->second);
    }
  });
  return out;
}

nlohmann::ordered_json SplitManifest::to_json() const {
  auto file = [](const SplitFileInfo& f) {
    return nlohmann::ordered_json{{"path", f.path}, {"records", f.records}, {"sha256", f.sha256}};
  };
  return {{"format", "cabench-ca-dataset/1"},
          {"config", config.to_json()},
          {"config_digest", config.digest()},
          {"rng", kRngAlgorithm},
          {"boundary", "periodic"},
          {"neighborhood_order", "msb-first, leftmost cell most significant"},
          {"rule_string", "character i is the output for neighborhood value i"},
          {"files", {{"train", file(train)}, {"test", file(test)}}},
          {"test_rule_digest", test_rule_digest},
          {"test_rules_distinct", test_rules_distinct},
          {"train_duplicate_rules", train_duplicate_rules},
          {"split_overlap", overlap}};
}

SplitManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                            const BuildOptions& options) {
  const InstanceSampler sampler(config);
  ensure_directory(out_dir);

  SplitManifest manifest;
  manifest.config = config;
  manifest.test_rule_digest = sampler.test_rules().digest(config.radius);
  manifest.test_rules_distinct = sampler.test_rules().size();

  manifest.test = write_split(
      out_dir, Split::Test, config.n_test, options.workers,
      [&](std::uint64_t id) { return sampler.sample(Split::Test, id); }, [](const Instance&) {});

  std::unordered_map<std::uint64_t, std::uint64_t> salts;
  if (config.dedup_train) salts = dedup_salts(sampler);
  RuleSet train_rules;
  manifest.train = write_split(
      out_dir, Split::Train, config.n_train, options.workers,
      [&](std::uint64_t id) {
        auto it = salts.find(id);
        return sampler.sample(Split::Train, id, it == salts.end() ? 0 : it->second);
      },
      [&](const Instance& inst) {
        if (!train_rules.insert(inst.orbit.rule)) ++manifest.train_duplicate_rules;
        if (sampler.test_rules().contains(inst.orbit.rule)) ++manifest.overlap;
      });
  if (manifest.overlap != 0) throw InternalError("train/test rule sets overlap");

  auto doc = manifest.to_json();
  doc["run"] = {{"subcommand", options.subcommand}, {"seed", config.master_seed}, {"tool_version", kVersion}};
  write_json_file(out_dir / "manifest.json", doc);
  return manifest;
}

std::string format_instance(const Instance& instance) {
  std::string out;
  const auto& states = instance.orbit.states;
  out.reserve(64 + instance.orbit.rule.size() + states.size() * (states.empty() ? 0 : states[0].width() + 3));
  out += "{\"id\":";
  out += std::to_string(instance.id);
  out += ",\"split\":\"";
  out += split_name(instance.split);
  out += "\",\"rule\":\"";
  out += rule_encode(instance.orbit.rule);
  out += "\",\"states\":[";
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (t) out += ',';
    out += '"';
    out += state_encode(states[t]);
    out += '"';
  }
  out += "]}";
  return out;
}

Instance parse_instance(std::string_view text, int radius, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instance record: ") + e.what(), line);
  }
  if (!j.is_object()) throw ParseError("instance record must be an object", line);
  Instance inst;
  try {
    inst.id = field(j, "id", line).get<std::uint64_t>();
    inst.split = parse_split(field(j, "split", line).get<std::string>());
    inst.orbit.rule = rule_decode(field(j, "rule", line).get<std::string>(), radius);
    const auto& states = field(j, "states", line);
    if (!states.is_array() || states.empty()) throw ParseError("'states' must be a non-empty array", line);
    for (const auto& s : states) {
      inst.orbit.states.push_back(state_decode(s.get<std::string>()));
      if (inst.orbit.states.back().width() != inst.orbit.states.front().width()) {
        throw ParseError("states of differing widths", line);
      }
    }
  } catch (const ParseError& e) {
    if (e.line() == 0 && line != 0) throw ParseError(e.detail(), line);
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field type: ") + e.what(), line);
  } catch (const InvalidInput& e) {
    throw ParseError(e.what(), line);
  }
  return inst;
}

std::vector<Instance> load_instances(const std::filesystem::path& path, const LoadOptions& options) {
  std::vector<Instance> out;
  std::uint64_t index = 0;
  for_each_line(path, [&](std::string_view text, std::size_t line) {
    Instance inst;
    try {
      inst = parse_instance(text, options.radius, line);
    } catch (const ParseError& e) {
      throw e.in_file(path.string());
    }
    if (options.spot_check_stride && index % options.spot_check_stride == 0) {
      const auto& states = inst.orbit.states;
      for (std::size_t t = 0; t + 1 < states.size(); ++t) {
        if (step(states[t], inst.orbit.rule) != states[t + 1]) {
          throw InconsistentOrbit(path.string() + ": line " + std::to_string(line) + ": state " +
                                  std::to_string(t + 1) + " is not the image of state " + std::to_string(t));
        }
      }
    }
    ++index;
    out.push_back(std::move(inst));
  });
  return out;
}

namespace {

std::string rule_field(std::string_view text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line);
  }
  if (!j.is_object() || !j.contains("rule") || !j["rule"].is_string()) {
    throw ParseError("record has no string field 'rule'", line);
  }
  std::string rule = j["rule"].get<std::string>();
  if (rule.empty() || rule.find_first_not_of("01") != std::string::npos) {
    throw ParseError("rule is not a bit-string", line);
  }
  return rule;
}

}  // namespace

DisjointResult verify_disjoint(const std::filesystem::path& train_file, const std::filesystem::path& test_file) {
  std::unordered_set<std::string> train_rules;
  try {
    for_each_line(train_file, [&](std::string_view text, std::size_t line) {
      train_rules.insert(rule_field(text, line));
    });
  } catch (const ParseError& e) {
    throw e.in_file(train_file.string());
  }
  DisjointResult result;
  try {
    for_each_line(test_file, [&](std::string_view text, std::size_t line) {
      if (train_rules.contains(rule_field(text, line))) ++result.overlap;
    });
  } catch (const ParseError& e) {
    throw e.in_file(test_file.string());
  }
  result.disjoint = result.overlap == 0;
  return result;
}

}  // namespace cabench
