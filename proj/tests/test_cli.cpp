#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "rsica/config.hpp"
#include "rsica/dataset.hpp"
#include "rsica/error.hpp"
#include "rsica/metrics.hpp"
#include "temp_dir.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rsica;
using rsica::testing::read_file;
using rsica::testing::TempDir;
using rsica::testing::write_file;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::set<std::string> files_under(const fs::path& root) {
  std::set<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.insert(fs::relative(e.path(), root).string());
  }
  return files;
}

std::string dataset_bytes(const fs::path& out) {
  return read_file(out / "train.jsonl") + read_file(out / "test.jsonl") +
         read_file(out / "stats.json");
}

TEST(Usage, ExitCodes) {
  EXPECT_EQ(run_cli({"no-such-command"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"evaluate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"kernel-check", "--seed", "abc"}).code, cli::kExitUsage);
  const RunResult help = run_cli({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  for (const char* sub : {"analyze", "generate", "evaluate", "kernel-check"}) {
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Analyze, WritesOneFilePerPairAndIsByteStable) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 3, 4);
  const RunResult first = run_cli({"analyze", "--config", src.config_file.string()});
  ASSERT_EQ(first.code, 0) << first.err;
  const fs::path analysis = dir / "out" / "analysis";
  EXPECT_EQ(files_under(analysis),
            (std::set<std::string>{"pair_1000.json", "pair_1001.json", "pair_1002.json"}));
  std::map<std::string, std::string> before;
  for (const auto& f : files_under(analysis)) before[f] = read_file(analysis / f);

  ASSERT_EQ(run_cli({"analyze", "--config", src.config_file.string()}).code, 0);
  for (const auto& [f, bytes] : before) EXPECT_EQ(read_file(analysis / f), bytes) << f;

  const Json j = Json::parse(before.at("pair_1000.json"));
  EXPECT_EQ(j["id"], "pair_1000");
  EXPECT_TRUE(j.contains("counts"));
  EXPECT_EQ(before.at("pair_1000.json").back(), '\n');
  EXPECT_EQ(before.at("pair_1000.json").find('\r'), std::string::npos);
}

TEST(Analyze, FlagsOverrideConfig) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 3, 4);
  const RunResult r = run_cli({"analyze", "--config", src.config_file.string(), "--ids",
                               "pair_1001", "--out", (dir / "other").string(),
                               "--connectivity", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(files_under(dir / "other"), (std::set<std::string>{"analysis/pair_1001.json"}));
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Analyze, MissingMasksDirNamesThePath) {
  TempDir dir;
  const std::string missing = (dir / "nowhere").string();
  const RunResult r = run_cli({"analyze", "--masks", missing, "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(Analyze, UnreadableMaskFails) {
  TempDir dir;
  fs::create_directories(dir / "masks");
  write_file(dir / "masks" / "broken.png", "not a png");
  const RunResult r = run_cli({"analyze", "--masks", (dir / "masks").string(), "--out",
                               (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("broken.png"), std::string::npos) << r.err;
}

TEST(Generate, TwoPairsGiveEighteenRecords) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 2, 6);
  const RunResult r = run_cli({"generate", "--config", src.config_file.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("open_qa"), std::string::npos) << r.err;
  const auto train = read_jsonl(dir / "out" / "train.jsonl");
  const auto test = read_jsonl(dir / "out" / "test.jsonl");
  EXPECT_EQ(train.size() + test.size(), 18u);
  std::map<TaskType, int> per_task;
  for (const auto* bucket : {&train, &test})
    for (const auto& rec : *bucket) ++per_task[rec.task_type];
  EXPECT_EQ(per_task[TaskType::Caption], 10);
  for (TaskType t : {TaskType::Binary, TaskType::Quant, TaskType::Localize, TaskType::Multiturn}) {
    EXPECT_EQ(per_task[t], 2);
  }
  const Json stats = Json::parse(read_file(dir / "out" / "stats.json"));
  EXPECT_FALSE(stats.dump().empty());
}

TEST(Generate, DeterministicAcrossRunsAndThreads) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 10, 8);
  std::vector<std::string> outputs;
  int run = 0;
  for (const char* threads : {"1", "1", "8"}) {
    const fs::path out = dir / ("run" + std::to_string(run++));
    const RunResult r = run_cli({"generate", "--config", src.config_file.string(), "--out",
                                 out.string(), "--threads", threads, "--seed", "99",
                                 "--backend", "mock"});
    ASSERT_EQ(r.code, 0) << r.err;
    outputs.push_back(dataset_bytes(out));
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
  EXPECT_NE(outputs[0].find("open_qa"), std::string::npos);
}

TEST(Generate, WritesOnlyUnderOutputAndCache) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 4, 8);
  const auto before = files_under(dir.path());
  const RunResult r = run_cli({"generate", "--config", src.config_file.string(), "--backend",
                               "mock", "--cache", (dir / "cache").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& f : files_under(dir.path())) {
    if (before.contains(f)) continue;
    EXPECT_TRUE(f.starts_with("out/") || f.starts_with("cache/")) << f;
  }
  EXPECT_FALSE(files_under(dir / "cache").empty());
}

TEST(Generate, SourceInconsistencyFails) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 2, 8);
  fs::remove(src.masks_dir / "pair_1001.png");
  const RunResult r = run_cli({"generate", "--config", src.config_file.string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("pair_1001"), std::string::npos) << r.err;
}

TEST(Generate, RemoteBackendNeedsCredential) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 1, 8);
  Json config = Json::parse(read_file(src.config_file));
  config["llm"] = {{"backend", "remote"}, {"api_key_env", "RSICA_TEST_UNSET_KEY"}};
  write_file(src.config_file, config.dump());
  ::unsetenv("RSICA_TEST_UNSET_KEY");
  const RunResult r = run_cli({"generate", "--config", src.config_file.string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("RSICA_TEST_UNSET_KEY"), std::string::npos) << r.err;
}

TEST(Evaluate, SelfAndPredictionFiles) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 4, 9);
  ASSERT_EQ(run_cli({"generate", "--config", src.config_file.string()}).code, 0);
  const std::string refs = (dir / "out" / "train.jsonl").string();

  const RunResult self = run_cli({"evaluate", "--references", refs, "--self"});
  ASSERT_EQ(self.code, 0) << self.err;
  const Json report = Json::parse(self.out);
  EXPECT_EQ(report["tasks"]["caption"]["metrics"]["bleu_4"], 1.0);
  EXPECT_EQ(report["tasks"]["binary"]["metrics"]["f1"], 1.0);
  EXPECT_EQ(report["tasks"]["quant"]["metrics"]["rmse"], 0.0);

  // Poor predictions still exit 0 and produce the same key schema.
  const auto records = read_jsonl(refs);
  std::vector<Prediction> bad;
  for (const auto& p : predictions_from_references(records)) bad.push_back({p.id, p.task_type, "no idea"});
  write_predictions(dir / "bad.jsonl", bad);
  const RunResult poor =
      run_cli({"evaluate", "--references", refs, "--predictions", (dir / "bad.jsonl").string()});
  ASSERT_EQ(poor.code, 0) << poor.err;
  const Json poor_report = Json::parse(poor.out);
  for (const auto& [task, body] : report["tasks"].items()) {
    std::vector<std::string> a, b;
    for (const auto& [k, v] : body["metrics"].items()) a.push_back(k);
    for (const auto& [k, v] : poor_report["tasks"][task]["metrics"].items()) b.push_back(k);
    EXPECT_EQ(a, b) << task;
  }

  const RunResult csv = run_cli({"evaluate", "--references", refs, "--self", "--csv", "--out",
                                 (dir / "r.csv").string()});
  ASSERT_EQ(csv.code, 0);
  EXPECT_TRUE(read_file(dir / "r.csv").starts_with("task,metric,value\n"));
}

TEST(Evaluate, MalformedLineIsCited) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 2, 9);
  ASSERT_EQ(run_cli({"generate", "--config", src.config_file.string()}).code, 0);
  const std::string refs = (dir / "out" / "train.jsonl").string();
  const auto records = read_jsonl(refs);
  const auto preds = predictions_from_references(records);
  ASSERT_GE(preds.size(), 4u);
  std::string text;
  for (int i = 0; i < 4; ++i) {
    text += Json{{"id", preds[i].id}, {"task_type", std::string(to_string(preds[i].task_type))},
                 {"text", preds[i].text}}
                .dump() +
            "\n";
  }
  text += "{\"id\": \"broken\n";
  write_file(dir / "p.jsonl", text);
  const RunResult r =
      run_cli({"evaluate", "--references", refs, "--predictions", (dir / "p.jsonl").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("line 5"), std::string::npos) << r.err;

  const RunResult unknown = run_cli({"evaluate", "--references", refs, "--predictions",
                                     (dir / "absent.jsonl").string()});
  EXPECT_EQ(unknown.code, cli::kExitFailure);
}

TEST(KernelCheck, DefaultPassesAndIsDeterministic) {
  const RunResult a = run_cli({"kernel-check", "--seed", "11"});
  ASSERT_EQ(a.code, 0) << a.err;
  const RunResult b = run_cli({"kernel-check", "--seed", "11"});
  EXPECT_EQ(a.out, b.out);
  const Json j = Json::parse(a.out);
  EXPECT_EQ(j["pass"], true);
  for (const char* op : {"feature_diff", "csrm_forward", "csrm_backward", "softmax_rows",
                         "attention_forward", "qformer_forward", "cross_entropy", "linear",
                         "softmax_cross_entropy"}) {
    EXPECT_TRUE(j["checks"].contains(op)) << op;
  }
}

TEST(KernelCheck, OverTightToleranceFailsWithPerOpErrors) {
  const RunResult r = run_cli({"kernel-check", "--tolerance", "1e-15"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("csrm_backward failed"), std::string::npos) << r.err;
  EXPECT_EQ(Json::parse(r.out)["pass"], false);
  EXPECT_EQ(run_cli({"kernel-check", "--tolerance", "-1"}).code, cli::kExitFailure);
}

TEST(ConvertCaptions, LevirLayout) {
  TempDir dir;
  write_file(dir / "levir.json", R"({"images": [
    {"filename": "train_1.png", "split": "train", "sentences": [{"raw": "a road"}]},
    {"filename": "val_2.png", "split": "val", "sentences": [{"raw": "b"}]}]})");
  const RunResult r = run_cli({"convert-captions", "--levir", (dir / "levir.json").string(),
                               "--out", (dir / "captions.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const CaptionSource source = load_caption_source(dir / "captions.json");
  ASSERT_EQ(source.size(), 1u);
  EXPECT_EQ(source.at("train_1").captions.front(), "a road");
}

TEST(Config, RelativePathsAndStrictKeys) {
  TempDir dir;
  const Json j = Json::parse(R"({
    "schema_version": 1,
    "paths": {"masks_dir": "m", "captions_file": "/abs/c.json", "cache_dir": "cache"},
    "categories": {"1": "road", "2": "building", "3": "water"},
    "changemap": {"connectivity": 4, "min_area": 3, "grid": 3, "threshold": 0.1},
    "generation": {"seed": 18446744073709551615, "threads": 2, "tasks": ["caption", "binary"]},
    "llm": {"backend": "mock"}})");
  const RunConfig c = run_config_from_json(j, dir.path());
  EXPECT_EQ(c.masks_dir, dir / "m");
  EXPECT_EQ(c.captions_file, fs::path("/abs/c.json"));
  EXPECT_EQ(c.cache_dir, dir / "cache");
  EXPECT_EQ(c.categories.at(0), "none");
  EXPECT_EQ(c.categories.at(3), "water");
  EXPECT_EQ(c.analysis.label.connectivity, Connectivity::Four);
  EXPECT_EQ(c.seed, 18446744073709551615ull);
  EXPECT_EQ(c.tasks, (std::vector<TaskType>{TaskType::Caption, TaskType::Binary}));
  EXPECT_TRUE(std::holds_alternative<MockBackend>(make_backend(c).value()));

  const RunConfig back = run_config_from_json(run_config_to_json(c));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.masks_dir, c.masks_dir);

  EXPECT_THROW(run_config_from_json(Json::parse(R"({"schema_version": 2})")), SchemaError);
  EXPECT_THROW(run_config_from_json(Json::parse(R"({"schema_version": 1, "extra": 1})")),
               SchemaError);
  EXPECT_THROW(run_config_from_json(
                   Json::parse(R"({"schema_version": 1, "generation": {"seed": -1}})")),
               SchemaError);
  RunConfig bad;
  bad.analysis.grid.threshold = 1.0;
  EXPECT_THROW(validate(bad), InvalidArgument);
  bad = RunConfig{};
  bad.threads = 0;
  EXPECT_THROW(validate(bad), InvalidArgument);
}

TEST(Config, FlagsOverrideFileValues) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 1, 8);
  Json config = Json::parse(read_file(src.config_file));
  config["changemap"] = {{"threshold", 1.5}};
  write_file(src.config_file, config.dump());
  EXPECT_EQ(run_cli({"analyze", "--config", src.config_file.string()}).code, cli::kExitFailure);

  config["changemap"] = {{"threshold", 0.0}};
  write_file(src.config_file, config.dump());
  const fs::path out = dir / "out" / "analysis" / "pair_1000.json";
  ASSERT_EQ(run_cli({"analyze", "--config", src.config_file.string()}).code, cli::kExitOk);
  const std::string from_file = read_file(out);
  ASSERT_EQ(run_cli({"analyze", "--config", src.config_file.string(), "--threshold", "0.99"}).code,
            cli::kExitOk);
  EXPECT_NE(read_file(out), from_file);
}

}  // namespace
