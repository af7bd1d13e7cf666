#include "cabench/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "cabench/datagen.hpp"
#include "cabench/digest.hpp"
#include "cabench/error.hpp"
#include "cabench/eval.hpp"
#include "cabench/groupmul.hpp"
#include "cabench/io.hpp"
#include "cabench/oracle.hpp"
#include "cabench/tasks.hpp"
#include "cabench/version.hpp"

namespace cabench {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kOutEnv = "CABENCH_OUT";

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

fs::path resolve_out(const std::string& flag, const std::string& subcommand) {
  if (!flag.empty()) return flag;
  if (const char* root = std::getenv(kOutEnv); root && *root) return fs::path(root) / subcommand;
  throw UsageError("--out is required when " + std::string(kOutEnv) + " is not set");
}

ojson file_entry(const fs::path& path, const std::string& label) {
  return {{"path", label}, {"sha256", sha256_file(path)}};
}

ojson run_manifest(const std::string& subcommand, ojson config, ojson seed, ojson inputs, ojson outputs) {
  return {{"format", "cabench-run/1"}, {"subcommand", subcommand}, {"config", std::move(config)},
          {"seed", std::move(seed)},   {"inputs", std::move(inputs)}, {"outputs", std::move(outputs)},
          {"tool_version", kVersion}};
}

// A dataset argument is either a directory from gen-ca or a single instance file.
struct DatasetInput {
  fs::path file;
  int radius = 2;
};

DatasetInput resolve_dataset(const fs::path& arg, const std::string& split, int radius_flag) {
  if (!fs::is_directory(arg)) {
    if (!fs::exists(arg)) throw IoError(arg.string(), "no such file or directory");
    return {arg, radius_flag};
  }
  DatasetInput in{arg / (split + ".jsonl"), radius_flag};
  const fs::path manifest = arg / "manifest.json";
  if (fs::exists(manifest)) {
    const auto j = read_json_file(manifest);
    if (j.contains("config") && j["config"].contains("r")) in.radius = j["config"]["r"].get<int>();
  }
  return in;
}

struct GenCaArgs {
  std::string preset;
  std::optional<int> w, r, t, context;
  std::optional<std::uint64_t> n_train, n_test, seed;
  bool dedup_train = false;
  unsigned workers = default_workers();
  std::string out;
};

int cmd_gen_ca(const GenCaArgs& a, std::ostream& out) {
  DatasetConfig config;
  if (a.preset == "paper") {
    config = DatasetConfig::paper_preset();
  } else if (!a.seed) {
    throw UsageError("--seed is required unless --preset is given");
  }
  if (a.w) config.width = *a.w;
  if (a.r) config.radius = *a.r;
  if (a.t) config.steps = *a.t;
  if (a.context) config.context_len = *a.context;
  if (a.n_train) config.n_train = *a.n_train;
  if (a.n_test) config.n_test = *a.n_test;
  if (a.seed) config.master_seed = *a.seed;
  config.dedup_train = a.dedup_train;
  const fs::path dir = resolve_out(a.out, "gen-ca");
  const SplitManifest m = build_dataset(config, dir, BuildOptions{a.workers, "gen-ca"});
  out << "wrote " << m.train.records << " train and " << m.test.records << " test instances to " << dir.string()
      << "\n";
  out << "test rules distinct " << m.test_rules_distinct << ", train duplicate rules " << m.train_duplicate_rules
      << ", overlap " << m.overlap << "\n";
  return kExitOk;
}

struct EmitArgs {
  std::string dataset;
  std::string split = "test";
  std::string variant = "os";
  std::vector<int> ks{1};
  int context = 10;
  int radius = 2;
  bool mask_slots = false;
  bool raw = false;
  std::string out;
};

int cmd_emit(const EmitArgs& a, std::ostream& out) {
  const DatasetInput in = resolve_dataset(a.dataset, a.split, a.radius);
  const Variant variant = parse_variant(a.variant);
  const auto instances = load_instances(in.file, LoadOptions{in.radius});
  const fs::path dir = resolve_out(a.out, "emit-tasks");
  ensure_directory(dir);
  const EmitOptions options{a.context, a.mask_slots};

  ojson outputs = ojson::array();
  for (int k : a.ks) {
    std::string body;
    for (const auto& inst : instances) {
      const TaskSample sample = emit(inst, variant, k, options);
      body += a.raw ? sample.raw() : format_task_record(sample);
      body += '\n';
    }
    const std::string name = a.split + "_" + std::string(variant_name(variant)) + "_k" + std::to_string(k) +
                             (a.raw ? ".txt" : ".jsonl");
    write_text_file(dir / name, body);
    auto entry = file_entry(dir / name, name);
    entry["records"] = instances.size();
    entry["k"] = k;
    outputs.push_back(entry);
    out << "wrote " << instances.size() << " records to " << (dir / name).string() << "\n";
  }
  ojson config{{"variant", variant_name(variant)}, {"k", a.ks},         {"context_len", a.context},
               {"mask_slots", a.mask_slots},       {"split", a.split},  {"radius", in.radius},
               {"raw", a.raw}};
  auto manifest = run_manifest("emit-tasks", config, nullptr, ojson::array({file_entry(in.file, in.file.string())}),
                               outputs);
  manifest["vocab"] = Vocab::manifest()["tokens"];
  write_json_file(dir / "manifest.json", manifest);
  return kExitOk;
}

struct OracleArgs {
  std::string dataset;
  std::string split = "test";
  std::string variant = "os";
  int k_max = 4;
  int context = 10;
  int radius = 2;
  unsigned workers = default_workers();
  std::uint64_t max_leaves = 1u << 16;
  bool predictions = false;
  std::vector<int> pred_ks;
  std::string undetermined = "mask";
  std::string out;
  bool json = false;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  const DatasetInput in = resolve_dataset(a.dataset, a.split, a.radius);
  const Variant variant = parse_variant(a.variant);
  const auto instances = load_instances(in.file, LoadOptions{in.radius});
  const CeilingOptions options{a.context, a.k_max, a.workers, a.max_leaves};
  const CeilingReport report = ceiling_report(instances, variant, options);
  if (a.json) {
    out << report.to_json().dump(2) << "\n";
  } else {
    out << report.table();
  }

  if (a.out.empty() && !a.predictions && !std::getenv(kOutEnv)) return kExitOk;
  const fs::path dir = resolve_out(a.out, "oracle-eval");
  ensure_directory(dir);
  ojson outputs = ojson::array();
  write_json_file(dir / "ceiling.json", report.to_json());
  outputs.push_back(file_entry(dir / "ceiling.json", "ceiling.json"));

  std::vector<int> ks = a.pred_ks;
  if (ks.empty()) {
    for (int k = 1; k <= a.k_max; ++k) ks.push_back(k);
  }
  if (a.predictions) {
    const bool mask = a.undetermined == "mask";
    for (int k : ks) {
      std::string body;
      for (const auto& inst : instances) {
        PredictionRecord rec{inst.id, variant, k, oracle_prediction_text(inst, variant, k, a.context, mask),
                             mask ? "oracle_masked" : "oracle_zero_fill"};
        body += format_prediction_record(rec);
        body += '\n';
      }
      const std::string name = "oracle_" + std::string(variant_name(variant)) + "_k" + std::to_string(k) + ".jsonl";
      write_text_file(dir / name, body);
      outputs.push_back(file_entry(dir / name, name));
    }
  }
  ojson config{{"variant", variant_name(variant)}, {"k_max", a.k_max},         {"context_len", a.context},
               {"split", a.split},                 {"radius", in.radius},      {"max_leaves", a.max_leaves},
               {"predictions", a.predictions},     {"undetermined", a.undetermined}};
  write_json_file(dir / "manifest.json",
                  run_manifest("oracle-eval", config, nullptr,
                               ojson::array({file_entry(in.file, in.file.string())}), outputs));
  return kExitOk;
}

struct ScoreArgs {
  std::vector<std::string> preds;
  std::string gold;
  std::string oracle;
  std::string out;
  bool json = false;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  std::optional<CeilingReport> ceiling;
  if (!a.oracle.empty()) ceiling = CeilingReport::from_json(read_json_file(a.oracle));
  const auto gold = load_gold(a.gold);

  std::vector<EvalReport> reports;
  for (const auto& p : a.preds) {
    const auto preds = load_predictions(p);
    EvalReport r = evaluate(preds, gold, ceiling ? &*ceiling : nullptr);
    r.source = p;
    reports.push_back(std::move(r));
  }
  ojson doc;
  if (reports.size() == 1) {
    doc = reports.front().to_json();
  } else {
    doc = {{"kind", "eval-runs"}, {"runs", ojson::array()}};
    for (const auto& r : reports) doc["runs"].push_back(r.to_json());
    doc["aggregate"] = aggregate_runs(reports).to_json();
  }
  if (a.json) {
    out << doc.dump(2) << "\n";
  } else {
    for (const auto& r : reports) out << r.table();
    if (reports.size() > 1) out << aggregate_runs(reports).table();
  }

  if (a.out.empty() && !std::getenv(kOutEnv)) return kExitOk;
  const fs::path dir = resolve_out(a.out, "score");
  ensure_directory(dir);
  write_json_file(dir / "report.json", doc);
  ojson inputs = ojson::array();
  for (const auto& p : a.preds) inputs.push_back(file_entry(p, p));
  inputs.push_back(file_entry(a.gold, a.gold));
  if (!a.oracle.empty()) inputs.push_back(file_entry(a.oracle, a.oracle));
  write_json_file(dir / "manifest.json",
                  run_manifest("score", {{"runs", a.preds.size()}}, nullptr, inputs,
                               ojson::array({file_entry(dir / "report.json", "report.json")})));
  return kExitOk;
}

struct GenGroupArgs {
  std::string group;
  std::vector<int> lengths{5, 10, 15, 20, 40};
  std::uint64_t n = 1000;
  std::optional<std::uint64_t> seed;
  unsigned workers = default_workers();
  std::string out;
};

int cmd_gen_group(const GenGroupArgs& a, std::ostream& out) {
  if (!a.seed) throw UsageError("--seed is required");
  const GroupSpec group = make_group(a.group);
  GroupDatasetOptions options;
  options.lengths = a.lengths;
  options.n_per_length = a.n;
  options.seed = *a.seed;
  options.workers = a.workers;
  const fs::path dir = resolve_out(a.out, "gen-groupmul");
  const auto info = generate_groupmul_dataset(group, options, dir, "gen-groupmul");
  out << "wrote " << info.records << " " << group.name << " samples to " << info.samples_path << "\n";
  return kExitOk;
}

struct ScoreGroupArgs {
  std::string pred;
  std::string gold;
  double threshold = 0.70;
  std::string out;
  bool json = false;
};

int cmd_score_group(const ScoreGroupArgs& a, std::ostream& out) {
  const GroupScoreReport report = score_groupmul(fs::path(a.pred), fs::path(a.gold), a.threshold);
  if (a.json) {
    out << report.to_json().dump(2) << "\n";
  } else {
    out << report.table();
  }
  if (a.out.empty() && !std::getenv(kOutEnv)) return kExitOk;
  const fs::path dir = resolve_out(a.out, "score-groupmul");
  ensure_directory(dir);
  write_json_file(dir / "report.json", report.to_json());
  write_json_file(dir / "manifest.json",
                  run_manifest("score-groupmul", {{"threshold", a.threshold}}, nullptr,
                               ojson::array({file_entry(a.pred, a.pred), file_entry(a.gold, a.gold)}),
                               ojson::array({file_entry(dir / "report.json", "report.json")})));
  return kExitOk;
}

const std::vector<std::string> kVariants{"os", "oo", "ors", "ros", "multi"};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cellular-automaton sequence prediction benchmark tools", "cabench"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenCaArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-ca", "Generate a train/test dataset of CA orbits");
  gen_cmd->add_option("--preset", gen.preset, "Configuration bundle")->check(CLI::IsMember({"paper"}));
  gen_cmd->add_option("--w", gen.w, "Lattice width (2r+1..64)");
  gen_cmd->add_option("--r", gen.r, "Neighborhood radius (1..3)");
  gen_cmd->add_option("--t", gen.t, "States per orbit, initial state included");
  gen_cmd->add_option("--context", gen.context, "Context length used by downstream tasks");
  gen_cmd->add_option("--n-train", gen.n_train, "Training instances");
  gen_cmd->add_option("--n-test", gen.n_test, "Test instances");
  gen_cmd->add_option("--seed", gen.seed, "Master seed (required without --preset)");
  gen_cmd->add_flag("--dedup-train", gen.dedup_train, "Resample repeated rules within train");
  gen_cmd->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output directory (default $CABENCH_OUT/gen-ca)");

  EmitArgs emit_args;
  auto* emit_cmd = app.add_subcommand("emit-tasks", "Emit tokenized task samples from a dataset");
  emit_cmd->add_option("dataset", emit_args.dataset, "Dataset directory or instance file")->required();
  emit_cmd->add_option("--split", emit_args.split, "Split to read from a dataset directory")
      ->check(CLI::IsMember({"train", "test"}));
  emit_cmd->add_option("--variant", emit_args.variant, "Task variant")->check(CLI::IsMember(kVariants));
  emit_cmd->add_option("--k", emit_args.ks, "Horizons, comma separated")->delimiter(',')->check(CLI::PositiveNumber);
  emit_cmd->add_option("--context", emit_args.context, "Context length")->check(CLI::PositiveNumber);
  emit_cmd->add_option("--r", emit_args.radius, "Radius when reading a bare instance file")->check(CLI::Range(1, 3));
  emit_cmd->add_flag("--mask-slots", emit_args.mask_slots, "Append one <mask> per target token to the input");
  emit_cmd->add_flag("--raw", emit_args.raw, "Write plain concatenated lines instead of JSONL records");
  emit_cmd->add_option("--out", emit_args.out, "Output directory (default $CABENCH_OUT/emit-tasks)");

  OracleArgs orc;
  auto* orc_cmd = app.add_subcommand("oracle-eval", "Compute oracle ceilings from partial rule inference");
  orc_cmd->add_option("dataset", orc.dataset, "Dataset directory or instance file")->required();
  orc_cmd->add_option("--split", orc.split, "Split to read from a dataset directory")
      ->check(CLI::IsMember({"train", "test"}));
  orc_cmd->add_option("--variant", orc.variant, "Task variant")->check(CLI::IsMember(kVariants));
  orc_cmd->add_option("--k-max", orc.k_max, "Largest horizon")->check(CLI::PositiveNumber);
  orc_cmd->add_option("--context", orc.context, "Context length")->check(CLI::PositiveNumber);
  orc_cmd->add_option("--r", orc.radius, "Radius when reading a bare instance file")->check(CLI::Range(1, 3));
  orc_cmd->add_option("--workers", orc.workers, "Worker threads")->check(CLI::PositiveNumber);
  orc_cmd->add_option("--max-leaves", orc.max_leaves, "Completion enumeration budget per instance");
  orc_cmd->add_flag("--predictions", orc.predictions, "Also write oracle prediction files");
  orc_cmd->add_option("--pred-k", orc.pred_ks, "Horizons for prediction files (default 1..k-max)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  orc_cmd->add_option("--undetermined", orc.undetermined, "Undetermined cells as <mask> or 0")
      ->check(CLI::IsMember({"mask", "zero"}));
  orc_cmd->add_option("--out", orc.out, "Output directory (default $CABENCH_OUT/oracle-eval)");
  orc_cmd->add_flag("--json", orc.json, "Print the report as JSON");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score prediction files against gold task samples");
  score_cmd->add_option("predictions", score.preds, "Prediction files; several give mean and std")->required();
  score_cmd->add_option("--gold", score.gold, "Gold task file")->required();
  score_cmd->add_option("--oracle", score.oracle, "Ceiling report from oracle-eval");
  score_cmd->add_option("--out", score.out, "Output directory for report.json");
  score_cmd->add_flag("--json", score.json, "Print the report as JSON");

  GenGroupArgs gg;
  auto* gg_cmd = app.add_subcommand("gen-groupmul", "Generate group multiplication prefix samples");
  gg_cmd->add_option("--group", gg.group, "Group name")->required()->check(CLI::IsMember(group_names()));
  gg_cmd->add_option("--lengths", gg.lengths, "Sequence lengths, comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  gg_cmd->add_option("--n", gg.n, "Samples per length");
  gg_cmd->add_option("--seed", gg.seed, "Seed (required)");
  gg_cmd->add_option("--workers", gg.workers, "Worker threads")->check(CLI::PositiveNumber);
  gg_cmd->add_option("--out", gg.out, "Output directory (default $CABENCH_OUT/gen-groupmul)");

  ScoreGroupArgs sg;
  auto* sg_cmd = app.add_subcommand("score-groupmul", "Score group multiplication predictions");
  sg_cmd->add_option("predictions", sg.pred, "Prediction file with a labels array per line")->required();
  sg_cmd->add_option("gold", sg.gold, "Gold samples file")->required();
  sg_cmd->add_option("--threshold", sg.threshold, "Pass threshold on position accuracy")->check(CLI::Range(0.0, 1.0));
  sg_cmd->add_option("--out", sg.out, "Output directory for report.json");
  sg_cmd->add_flag("--json", sg.json, "Print the report as JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_ca(gen, out);
    if (emit_cmd->parsed()) return cmd_emit(emit_args, out);
    if (orc_cmd->parsed()) return cmd_oracle(orc, out);
    if (score_cmd->parsed()) return cmd_score(score, out);
    if (gg_cmd->parsed()) return cmd_gen_group(gg, out);
    if (sg_cmd->parsed()) return cmd_score_group(sg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace cabench
