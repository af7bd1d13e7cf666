#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "cabench/datagen.hpp"
#include "cabench/digest.hpp"
#include "cabench/error.hpp"
#include "cabench/io.hpp"
#include "cabench/rng.hpp"
#include "test_support.hpp"

using namespace cabench;
using namespace cabench::test;

namespace {

DatasetConfig small_config(std::uint64_t seed = 7) {
  DatasetConfig c;
  c.n_train = 2000;
  c.n_test = 300;
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST(DatasetConfig, PresetMatchesStandardSetup) {
  const DatasetConfig c = DatasetConfig::paper_preset();
  EXPECT_EQ(c.width, 20);
  EXPECT_EQ(c.radius, 2);
  EXPECT_EQ(c.steps, 20);
  EXPECT_EQ(c.context_len, 10);
  EXPECT_EQ(c.n_train, 950000u);
  EXPECT_EQ(c.n_test, 100000u);
}

TEST(DatasetConfig, ValidateRejectsBadShapes) {
  DatasetConfig c;
  c.radius = 4;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = DatasetConfig{};
  c.width = 4;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = DatasetConfig{};
  c.width = 65;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = DatasetConfig{};
  c.steps = 13;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(DatasetConfig, DigestChangesWithEveryField) {
  const DatasetConfig base;
  std::set<std::string> digests{base.digest()};
  auto vary = [&](auto mutate) {
    DatasetConfig c = base;
    mutate(c);
    EXPECT_TRUE(digests.insert(c.digest()).second);
  };
  vary([](DatasetConfig& c) { c.width = 21; });
  vary([](DatasetConfig& c) { c.radius = 1; });
  vary([](DatasetConfig& c) { c.steps = 21; });
  vary([](DatasetConfig& c) { c.context_len = 9; });
  vary([](DatasetConfig& c) { c.n_train = 1; });
  vary([](DatasetConfig& c) { c.n_test = 1; });
  vary([](DatasetConfig& c) { c.master_seed = 1; });
  vary([](DatasetConfig& c) { c.dedup_train = true; });
  EXPECT_EQ(DatasetConfig{}.digest(), base.digest());
}

TEST(DatasetConfig, JsonRoundTrip) {
  DatasetConfig c = small_config(99);
  c.dedup_train = true;
  const DatasetConfig back = DatasetConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(back.digest(), c.digest());
}

TEST(Rng, StreamsAreKeyedNotOrdered) {
  CounterRng a(stream_key(1, 1, 5));
  CounterRng b(stream_key(1, 1, 5));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(stream_key(1, 1, 5), stream_key(1, 2, 5));
  EXPECT_NE(stream_key(1, 1, 5), stream_key(2, 1, 5));
  EXPECT_NE(stream_key(1, 1, 5), stream_key(1, 1, 5, 1));
}

TEST(Rng, BelowIsInRange) {
  CounterRng r(42);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(r.below(60), 60u);
}

TEST(Sampler, SameIdSameInstance) {
  const InstanceSampler s(small_config());
  const Instance a = s.sample(Split::Train, 17);
  const Instance b = s.sample(Split::Train, 17);
  EXPECT_EQ(a.orbit.rule, b.orbit.rule);
  EXPECT_EQ(a.orbit.states, b.orbit.states);
}

TEST(Sampler, OrbitsSatisfyStepInvariant) {
  const InstanceSampler s(small_config());
  for (std::uint64_t id = 0; id < 50; ++id) {
    const Instance inst = s.sample(Split::Test, id);
    ASSERT_EQ(inst.orbit.states.size(), 20u);
    for (std::size_t t = 1; t < inst.orbit.states.size(); ++t) {
      ASSERT_EQ(inst.orbit.states[t], step(inst.orbit.states[t - 1], inst.orbit.rule));
    }
  }
}

TEST(Sampler, RuleCollisionsNearBirthdayBound) {
  // 10^4 draws from 2^32 rules: expected colliding pairs n^2 / 2^33 ~= 0.012.
  DatasetConfig c = small_config();
  c.n_train = 10000;
  c.n_test = 1;
  const InstanceSampler s(c);
  RuleSet seen;
  int collisions = 0;
  for (std::uint64_t id = 0; id < c.n_train; ++id) collisions += !seen.insert(s.sample_rule(Split::Train, id));
  EXPECT_LE(collisions, 2);
}

TEST(Sampler, BitFrequenciesAreBalanced) {
  DatasetConfig c = small_config();
  c.n_test = 10000;
  const InstanceSampler s(c);
  std::vector<double> rule_ones(32, 0), cell_ones(20, 0);
  for (std::uint64_t id = 0; id < c.n_test; ++id) {
    const Instance inst = s.sample(Split::Test, id);
    for (int i = 0; i < 32; ++i) rule_ones[i] += inst.orbit.rule.bit(i);
    for (int w = 0; w < 20; ++w) cell_ones[w] += inst.orbit.states[0].cell(w);
  }
  for (double x : rule_ones) EXPECT_NEAR(x / c.n_test, 0.5, 0.02);
  for (double x : cell_ones) EXPECT_NEAR(x / c.n_test, 0.5, 0.02);
}

TEST(Sampler, TrainNeverUsesTestRules) {
  // r=1 leaves only 256 rules, so collisions with test would be frequent without rejection.
  DatasetConfig c;
  c.width = 8;
  c.radius = 1;
  c.n_test = 64;
  c.n_train = 2000;
  c.master_seed = 3;
  const InstanceSampler s(c);
  for (std::uint64_t id = 0; id < c.n_train; ++id) {
    ASSERT_FALSE(s.test_rules().contains(s.sample_rule(Split::Train, id)));
  }
}

TEST(Sampler, RejectionCapSurfacesAsError) {
  DatasetConfig c;
  c.width = 8;
  c.radius = 1;
  c.n_test = 20000;  // covers all 256 elementary rules
  c.n_train = 1;
  const InstanceSampler s(c);
  EXPECT_EQ(s.test_rules().size(), 256u);
  EXPECT_THROW(s.sample(Split::Train, 0), InternalError);
}

TEST(BuildDataset, ByteIdenticalAcrossRunsAndWorkers) {
  TempDir tmp;
  const DatasetConfig c = small_config();
  build_dataset(c, tmp / "a", BuildOptions{1});
  build_dataset(c, tmp / "b", BuildOptions{4});
  for (const char* f : {"train.jsonl", "test.jsonl", "manifest.json"}) {
    EXPECT_EQ(read_file(tmp / "a" / f), read_file(tmp / "b" / f)) << f;
  }
}

TEST(BuildDataset, ManifestRecordsDigestsAndRng) {
  TempDir tmp;
  const SplitManifest m = build_dataset(small_config(), tmp.path());
  const auto j = read_json_file(tmp / "manifest.json");
  EXPECT_EQ(j["rng"], kRngAlgorithm);
  EXPECT_EQ(j["config_digest"], small_config().digest());
  EXPECT_EQ(j["files"]["train"]["sha256"], sha256_hex(read_file(tmp / "train.jsonl")));
  EXPECT_EQ(j["files"]["test"]["sha256"], sha256_hex(read_file(tmp / "test.jsonl")));
  EXPECT_EQ(j["split_overlap"], 0);
  EXPECT_EQ(m.train.records, 2000u);
}

TEST(BuildDataset, SeedChangesContent) {
  TempDir tmp;
  build_dataset(small_config(1), tmp / "a");
  build_dataset(small_config(2), tmp / "b");
  EXPECT_NE(read_file(tmp / "a" / "test.jsonl"), read_file(tmp / "b" / "test.jsonl"));
}

TEST(BuildDataset, FilesMatchInMemoryGeneration) {
  TempDir tmp;
  const DatasetConfig c = small_config();
  build_dataset(c, tmp.path());
  const InstanceSampler s(c);
  const auto expected = generate_split(s, Split::Test, 3);
  const auto loaded = load_instances(tmp / "test.jsonl");
  ASSERT_EQ(loaded.size(), expected.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].id, expected[i].id);
    EXPECT_EQ(loaded[i].orbit.rule, expected[i].orbit.rule);
    EXPECT_EQ(loaded[i].orbit.states, expected[i].orbit.states);
  }
}

TEST(BuildDataset, DedupTrainRemovesRepeats) {
  TempDir tmp;
  DatasetConfig c;
  c.width = 8;
  c.radius = 1;
  c.n_test = 20;
  c.n_train = 200;
  c.master_seed = 5;
  c.dedup_train = true;
  const SplitManifest m = build_dataset(c, tmp.path());
  EXPECT_EQ(m.train_duplicate_rules, 0u);
  c.dedup_train = false;
  const SplitManifest plain = build_dataset(c, tmp / "plain");
  EXPECT_GT(plain.train_duplicate_rules, 0u);
}

TEST(BuildDataset, SmokeConfig) {
  TempDir tmp;
  DatasetConfig c;
  c.width = 8;
  c.radius = 1;
  c.n_train = 100;
  c.n_test = 10;
  c.master_seed = 1;
  build_dataset(c, tmp.path());
  const auto train = load_instances(tmp / "train.jsonl", LoadOptions{1, 1});
  ASSERT_EQ(train.size(), 100u);
  EXPECT_EQ(train.front().orbit.states.front().width(), 8);
  EXPECT_EQ(train.front().orbit.rule.size(), 8);
}

TEST(VerifyDisjoint, GeneratedDatasetIsDisjoint) {
  TempDir tmp;
  build_dataset(small_config(), tmp.path());
  const DisjointResult r = verify_disjoint(tmp / "train.jsonl", tmp / "test.jsonl");
  EXPECT_TRUE(r.disjoint);
  EXPECT_EQ(r.overlap, 0u);
}

TEST(VerifyDisjoint, TestCopiedIntoTrainOverlapsCompletely) {
  TempDir tmp;
  build_dataset(small_config(), tmp.path());
  // Test rules are distinct at this size, so every record must be counted.
  const DisjointResult r = verify_disjoint(tmp / "test.jsonl", tmp / "test.jsonl");
  EXPECT_FALSE(r.disjoint);
  EXPECT_EQ(r.overlap, 300u);
}

TEST(VerifyDisjoint, EmptyTestSplit) {
  TempDir tmp;
  DatasetConfig c = small_config();
  c.n_test = 0;
  build_dataset(c, tmp.path());
  const DisjointResult r = verify_disjoint(tmp / "train.jsonl", tmp / "test.jsonl");
  EXPECT_TRUE(r.disjoint);
  EXPECT_EQ(r.overlap, 0u);
}

TEST(VerifyDisjoint, MalformedLineReportsFileAndLine) {
  TempDir tmp;
  write_text_file(tmp / "train.jsonl", "{\"rule\":\"" + std::string(kGoldenRule) + "\"}\nnot json\n");
  write_text_file(tmp / "test.jsonl", "");
  try {
    verify_disjoint(tmp / "train.jsonl", tmp / "test.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("train.jsonl"), std::string::npos);
  }
}

TEST(InstanceFormat, RoundTrip) {
  const Instance g = golden_instance();
  const std::string line = format_instance(g);
  EXPECT_EQ(line.rfind("{\"id\":0,\"split\":\"test\",\"rule\":\"01011111100100000101111011111100\",", 0), 0u);
  const Instance back = parse_instance(line);
  EXPECT_EQ(back.orbit.rule, g.orbit.rule);
  EXPECT_EQ(back.orbit.states, g.orbit.states);
  EXPECT_EQ(back.split, Split::Test);
}

TEST(InstanceFormat, ParseErrorsCarryLine) {
  try {
    parse_instance("{\"id\":1}", 2, 12);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 12u);
  }
  EXPECT_THROW(parse_instance("[1,2]"), ParseError);
}

TEST(LoadInstances, SpotCheckCatchesCorruptedOrbit) {
  TempDir tmp;
  Instance g = golden_instance();
  g.orbit.states[5].set(3, !g.orbit.states[5].cell(3));
  write_text_file(tmp / "bad.jsonl", format_instance(golden_instance()) + "\n" + format_instance(g) + "\n");
  try {
    load_instances(tmp / "bad.jsonl", LoadOptions{2, 1});
    FAIL() << "expected InconsistentOrbit";
  } catch (const InconsistentOrbit& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("bad.jsonl"), std::string::npos);
    EXPECT_NE(what.find("line 2"), std::string::npos);
  }
  EXPECT_NO_THROW(load_instances(tmp / "bad.jsonl", LoadOptions{2, 0}));
}

TEST(LoadInstances, MissingFileIsIoError) {
  EXPECT_THROW(load_instances("/nonexistent/cabench/test.jsonl"), IoError);
}
