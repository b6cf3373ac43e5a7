#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "rsica/dataset.hpp"
#include "rsica/error.hpp"
#include "rsica/instructgen.hpp"
#include "rsica/metrics.hpp"
#include "rsica/templates.hpp"
#include "temp_dir.hpp"

namespace {

using namespace rsica;
using rsica::testing::TempDir;

const ImagePairRef kPair{"00042", "images/train/A/00042.png", "images/train/B/00042.png",
                         Split::Train};

const std::vector<std::string> kCategories = {"road", "building"};

ChangeMap map_from(const rsica::testing::oracle::Mask& m) {
  return rsica::testing::to_change_map(m);
}

rsica::testing::oracle::Mask blank(int w, int h) {
  return {w, h, std::vector<std::uint8_t>(w * h, 0)};
}

TEST(Templates, BuiltinCatalog) {
  const TemplateCatalog& t = TemplateCatalog::builtin();
  EXPECT_EQ(t.version, 1);
  EXPECT_EQ(t.caption, "Please briefly describe the changes in these two images.");
  EXPECT_NE(t.binary.find("answer yes or no"), std::string::npos);
  EXPECT_NE(t.quant.find("how many roads and buildings"), std::string::npos);
  EXPECT_NE(t.localize.find("3x3 grid"), std::string::npos);
  EXPECT_NE(t.multiturn[2].find("describe the changes of these two images in detail"),
            std::string::npos);
  EXPECT_FALSE(t.open_qa_system.empty());
  ASSERT_FALSE(t.seeds.empty());
}

TEST(Templates, RejectsWrongVersion) {
  Json j = Json::parse(R"({"version": 2})");
  EXPECT_THROW(TemplateCatalog::from_json(j), SchemaError);
}

TEST(RecordId, RoundTrip) {
  const std::string id = make_record_id("a:b", TaskType::OpenQa, 3);
  EXPECT_EQ(id, "a:b:open_qa:3");
  const auto key = parse_record_id(id);
  ASSERT_TRUE(key);
  EXPECT_EQ(key->pair_id, "a:b");
  EXPECT_EQ(key->task_type, TaskType::OpenQa);
  EXPECT_EQ(key->index, 3);
  EXPECT_FALSE(parse_record_id("no-colons").has_value());
  EXPECT_FALSE(parse_record_id("x:bogus:1").has_value());
}

TEST(CaptionRecords, OnePerCaptionVerbatim) {
  const std::vector<std::string> captions = {"a road appears", "b", "c", "d", "e"};
  const auto records = make_caption_records(kPair, captions);
  ASSERT_EQ(records.size(), 5u);
  EXPECT_EQ(records[0].turns[1].text, "a road appears");
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].turns[0].text, TemplateCatalog::builtin().caption);
    EXPECT_EQ(records[i].index, static_cast<int>(i));
    EXPECT_FALSE(check_record(records[i]).has_value());
  }
  EXPECT_THROW(make_caption_records(kPair, std::vector<std::string>{}), InvalidArgument);
  EXPECT_THROW(make_caption_records(kPair, std::vector<std::string>{"x", ""}), InvalidArgument);
}

TEST(BinaryRecord, AnswersFromChangeMap) {
  auto m = blank(8, 8);
  EXPECT_EQ(make_binary_record(kPair, map_from(m)).turns[1].text, "no");
  m.values[10] = 2;
  const auto r = make_binary_record(kPair, map_from(m));
  EXPECT_EQ(r.turns[1].text, "yes");
  EXPECT_NE(r.turns[0].text.find("answer yes or no"), std::string::npos);
}

TEST(QuantRecord, SeedPairCounts) {
  const CategoryCounts counts({{"road", 1}, {"building", 10}});
  const auto r = make_quant_record(kPair, counts);
  EXPECT_EQ(r.turns[1].text, "There is 1 new road and 10 new buildings.");
  const CategoryCounts parsed = parse_quant_answer(r.turns[1].text, kCategories);
  EXPECT_EQ(parsed, counts);
}

TEST(QuantRecord, ZeroAndMissing) {
  const CategoryCounts zero({{"road", 0}, {"building", 0}});
  EXPECT_EQ(make_quant_record(kPair, zero).turns[1].text,
            "There are no new roads and no new buildings.");
  const CategoryCounts partial({{"road", 2}});
  EXPECT_THROW(make_quant_record(kPair, partial, kCategories), InvalidArgument);
}

TEST(LocalizationRecord, Grammar) {
  const std::vector<std::pair<std::string, CellSet>> cells = {
      {"road", CellSet{Cell::BC, Cell::BL}}, {"building", CellSet{}}};
  EXPECT_EQ(make_localization_record(kPair, cells).turns[1].text,
            "roads: BL, BC; buildings: none");
  CellSet all;
  for (Cell c : kAllCells) all.insert(c);
  EXPECT_EQ(format_localization_answer({{"building", all}}),
            "buildings: TL, TC, TR, CL, CC, CR, BL, BC, BR");
}

TEST(MultiturnRecord, Structure) {
  auto m = blank(12, 12);
  m.values[0] = 1;
  const ChangeMap changed = map_from(m);
  const std::vector<std::string> captions = {"first caption", "second"};
  const auto r = make_multiturn_record(kPair, changed, count_by_category(changed), captions);
  ASSERT_EQ(r.turns.size(), 6u);
  EXPECT_EQ(r.turns[1].text, "yes");
  EXPECT_NE(r.turns[3].text.find("1 new road"), std::string::npos);
  EXPECT_EQ(r.turns[5].text, "first caption");
  EXPECT_NE(r.turns[4].text.find("describe the changes"), std::string::npos);
  EXPECT_FALSE(check_record(r).has_value());

  const ChangeMap unchanged = map_from(blank(12, 12));
  const auto u = make_multiturn_record(kPair, unchanged, count_by_category(unchanged), captions);
  EXPECT_EQ(u.turns[1].text, "no");
  EXPECT_EQ(u.turns[3].text, "There are no new roads and no new buildings.");
  EXPECT_THROW(make_multiturn_record(kPair, unchanged, count_by_category(unchanged),
                                     std::vector<std::string>{}),
               InvalidArgument);
}

TEST(CheckRecord, Violations) {
  InstructionRecord r = make_binary_record(kPair, map_from(blank(4, 4)));
  EXPECT_FALSE(check_record(r).has_value());
  r.turns.pop_back();
  EXPECT_TRUE(check_record(r).has_value());
  r.turns = {{Role::Assistant, "a"}, {Role::Human, "b"}};
  EXPECT_TRUE(check_record(r).has_value());
  r.turns = {{Role::Human, "a"}, {Role::Assistant, "b"}, {Role::Human, "c"},
             {Role::Assistant, "d"}};
  EXPECT_TRUE(check_record(r).has_value());
}

TEST(TrainingText, StopMarkersOnlyOnExport) {
  const auto r = make_binary_record(kPair, map_from(blank(4, 4)));
  EXPECT_EQ(r.turns[1].text, "no");
  const std::string text = to_training_text(r);
  EXPECT_EQ(text, "Human: <Img> <Img> " + TemplateCatalog::builtin().binary +
                      " <STOP>\nAssistant: no <STOP>\n");
}

TEST(RecordJson, FieldOrderAndRoundTrip) {
  const auto r = make_caption_records(kPair, std::vector<std::string>{"x"})[0];
  const Json j = record_to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"id", "image_a", "image_b", "split",
                                            "task_type", "turns"}));
  const InstructionRecord back = record_from_json(j);
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.pair.id, kPair.id);
  EXPECT_EQ(back.turns, r.turns);
  EXPECT_THROW(record_from_json(Json::parse(R"({"id": 1})")), SchemaError);
}

TEST(OpenEndedPrompt, SectionsAndSeedCounts) {
  const std::vector<std::string> captions = {"a", "b", "c", "d", "e"};
  const CategoryCounts counts({{"road", 1}, {"building", 10}});
  const auto bundle = make_openended_prompt(captions, counts, {});
  for (const char* header : {"Change Captions", "Change Counts", "Change Contours"}) {
    EXPECT_NE(bundle.payload.find(header), std::string::npos) << header;
  }
  EXPECT_NE(bundle.payload.find(R"({"road": 1, "building": 10})"), std::string::npos);
  ASSERT_FALSE(bundle.seeds.empty());
  EXPECT_NE(bundle.seeds[0].input_context.find(R"({"road": 1, "building": 10})"),
            std::string::npos);
  EXPECT_FALSE(bundle.system.empty());

  const auto again = make_openended_prompt(captions, counts, {});
  EXPECT_EQ(again.payload, bundle.payload);
  EXPECT_EQ(again.system, bundle.system);
  EXPECT_THROW(make_openended_prompt(std::vector<std::string>{"a"}, counts, {}),
               InvalidArgument);
}

TEST(OpenEndedPrompt, ContoursUseTwoDecimals) {
  auto m = blank(256, 256);
  for (int y = 214; y < 256; ++y) m.values[y * 256 + 255] = 1;
  const ChangeAnalysis a = analyze_change_map(map_from(m), "p");
  const std::vector<std::string> captions(5, "c");
  const auto bundle = make_openended_prompt(captions, a.counts, a.contours);
  EXPECT_NE(bundle.payload.find("[[[1.0, 0.84]"), std::string::npos) << bundle.payload;
}

CaptionSource small_source() {
  CaptionSource source;
  source["p1"] = {Split::Train, {"c1", "c2", "c3", "c4", "c5"}};
  source["p2"] = {Split::Test, {"d1", "d2", "d3", "d4", "d5"}};
  return source;
}

TEST(GenerateDataset, RuleBasedArithmetic) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 2, 1);
  DatasetConfig config;
  config.masks_dir = src.masks_dir;
  CaptionSource source = load_caption_source(src.captions_file);
  for (auto& [id, entry] : source) entry.split = Split::Train;
  const GeneratedDataset d = generate_dataset(config, source);
  EXPECT_EQ(d.train.size(), 18u);
  EXPECT_EQ(d.stats.count(Split::Train, TaskType::Caption), 10u);
  for (TaskType t : {TaskType::Binary, TaskType::Quant, TaskType::Localize, TaskType::Multiturn}) {
    EXPECT_EQ(d.stats.count(Split::Train, t), 2u);
  }
  EXPECT_EQ(d.stats.count(Split::Train, TaskType::OpenQa), 0u);
  EXPECT_TRUE(std::is_sorted(d.train.begin(), d.train.end(), record_order));
}

TEST(GenerateDataset, EmptySource) {
  DatasetConfig config;
  const GeneratedDataset d = generate_dataset(config, CaptionSource{});
  EXPECT_TRUE(d.train.empty());
  EXPECT_TRUE(d.test.empty());
  EXPECT_EQ(d.stats.total(Split::Train), 0u);
  EXPECT_EQ(d.stats.total(Split::Test), 0u);
}

TEST(GenerateDataset, GroundTruthConsistency) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 9, 17);
  DatasetConfig config;
  config.masks_dir = src.masks_dir;
  const GeneratedDataset d = generate_dataset(config, load_caption_source(src.captions_file));
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  for (const auto* bucket : {&d.train, &d.test}) {
    for (const InstructionRecord& r : *bucket) {
      EXPECT_FALSE(check_record(r).has_value()) << r.id;
      (bucket == &d.train ? train_ids : test_ids).insert(r.pair.id);
      const ChangeMap map = load_change_map(src.masks_dir / (r.pair.id + ".png"),
                                            default_categories());
      const std::string& answer = r.turns.back().text;
      if (r.task_type == TaskType::Binary) {
        EXPECT_EQ(parse_binary_answer(answer), has_change(map));
      } else if (r.task_type == TaskType::Quant) {
        EXPECT_EQ(parse_quant_answer(answer, kCategories), count_by_category(map));
      } else if (r.task_type == TaskType::Localize) {
        const auto cells = parse_localization_answer(answer, kCategories);
        EXPECT_EQ(cells[0].second, grid_cells(map, 1));
        EXPECT_EQ(cells[1].second, grid_cells(map, 2));
      }
    }
  }
  for (const auto& id : train_ids) EXPECT_FALSE(test_ids.contains(id));
}

TEST(GenerateDataset, PerPairCountIsConstant) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 6, 2);
  DatasetConfig config;
  config.masks_dir = src.masks_dir;
  const GeneratedDataset d = generate_dataset(config, load_caption_source(src.captions_file));
  std::map<std::string, int> per_pair;
  for (const auto* bucket : {&d.train, &d.test})
    for (const auto& r : *bucket) ++per_pair[r.pair.id];
  for (const auto& [id, n] : per_pair) EXPECT_EQ(n, 9) << id;
}

TEST(BuildDataset, DeterministicAcrossRunsAndThreads) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 12, 5);
  DatasetConfig config;
  config.masks_dir = src.masks_dir;
  config.captions_file = src.captions_file;
  std::vector<std::string> outputs;
  for (unsigned threads : {1u, 1u, 8u}) {
    config.threads = threads;
    config.output_dir = dir / ("out" + std::to_string(outputs.size()));
    build_dataset(config);
    outputs.push_back(rsica::testing::read_file(config.output_dir / "train.jsonl") +
                      rsica::testing::read_file(config.output_dir / "test.jsonl") +
                      rsica::testing::read_file(config.output_dir / "stats.json"));
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
}

TEST(BuildDataset, MockBackendProducesOpenQa) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 4, 9);
  DatasetConfig config;
  config.masks_dir = src.masks_dir;
  config.captions_file = src.captions_file;
  config.output_dir = dir / "out";
  ChatClient client(MockBackend{9}, dir / "cache");
  const DatasetStats stats = build_dataset(config, &client);
  EXPECT_TRUE(stats.open_qa_enabled);
  EXPECT_GT(stats.qa_pairs_returned, 0u);
  EXPECT_EQ(stats.count(Split::Train, TaskType::OpenQa) + stats.count(Split::Test, TaskType::OpenQa),
            stats.qa_pairs_returned);
  const auto records = read_jsonl(config.output_dir / "train.jsonl");
  for (const auto& r : records) EXPECT_FALSE(check_record(r).has_value());
}

TEST(BuildDataset, InconsistentSplitFails) {
  TempDir dir;
  const auto src = rsica::testing::write_synthetic_source(dir.path(), 3, 1);
  rsica::testing::write_file(dir / "split.json",
                             R"({"pair_1000": "test", "pair_1001": "train", "pair_1002": "train"})");
  DatasetConfig config;
  config.masks_dir = src.masks_dir;
  config.captions_file = src.captions_file;
  config.split_file = dir / "split.json";
  config.output_dir = dir / "out";
  try {
    build_dataset(config);
    FAIL() << "expected an inconsistent split error";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("inconsistent split"), std::string::npos);
  }
}

TEST(BuildDataset, MissingSourcesFail) {
  TempDir dir;
  DatasetConfig config;
  config.captions_file = dir / "missing.json";
  config.output_dir = dir / "out";
  EXPECT_THROW(build_dataset(config), IoError);

  const auto src = rsica::testing::write_synthetic_source(dir.path(), 1, 1);
  config.captions_file = src.captions_file;
  config.masks_dir = dir / "no-masks";
  EXPECT_THROW(build_dataset(config), IoError);
}

TEST(Jsonl, RoundTripAndLineNumbers) {
  TempDir dir;
  const GeneratedDataset d = generate_dataset(
      [] {
        DatasetConfig c;
        c.tasks = {TaskType::Caption};
        return c;
      }(),
      small_source());
  write_jsonl(dir / "a.jsonl", d.train);
  const auto back = read_jsonl(dir / "a.jsonl");
  ASSERT_EQ(back.size(), d.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].turns, d.train[i].turns);

  std::string text = rsica::testing::read_file(dir / "a.jsonl");
  text += "{not json\n";
  rsica::testing::write_file(dir / "b.jsonl", text);
  try {
    read_jsonl(dir / "b.jsonl");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 6u);
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos);
  }
}

TEST(LevirConversion, SkipsValAndStripsExtension) {
  const Json levir = Json::parse(R"({"images": [
    {"filename": "train_000001.png", "split": "train",
     "sentences": [{"raw": " a road is built . "}, {"raw": "houses appear"}]},
    {"filename": "val_000002.png", "split": "val", "sentences": [{"raw": "x"}]},
    {"filename": "test_000003.png", "split": "test", "sentences": [{"raw": "nothing"}]}]})");
  const LevirConversion c = convert_levir_cc(levir);
  EXPECT_EQ(c.skipped, 1u);
  ASSERT_EQ(c.source.size(), 2u);
  EXPECT_EQ(c.source.at("train_000001").captions[0], "a road is built .");
  EXPECT_EQ(c.source.at("test_000003").split, Split::Test);
}

}  // namespace
