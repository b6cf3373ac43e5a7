#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsica/changemap.hpp"
#include "rsica/instructgen.hpp"
#include "rsica/llmclient.hpp"
#include "rsica/templates.hpp"

namespace rsica {

struct CaptionEntry {
  Split split = Split::Train;
  std::vector<std::string> captions;
};

// Canonical caption input, keyed (and therefore ordered) by pair id.
using CaptionSource = std::map<std::string, CaptionEntry>;

// {"<id>": {"split": "train"|"test", "captions": [...]}, ...}
CaptionSource caption_source_from_json(const Json& j);
Json caption_source_to_json(const CaptionSource& source);
CaptionSource load_caption_source(const std::filesystem::path& path);

// {"<id>": "train"|"test", ...}
std::map<std::string, Split> load_split_file(const std::filesystem::path& path);

struct LevirConversion {
  CaptionSource source;
  std::size_t skipped = 0;  // entries outside train/test (the val split)
};

// Reads the LEVIR-CC caption release ({"images": [{"filename", "split",
// "sentences": [{"raw"}...]}]}). Pair id = filename without extension.
LevirConversion convert_levir_cc(const Json& levir);

struct LlmSettings {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 1024;
};

// System message, seed demonstrations as user/assistant turns, then payload.
ChatRequest to_chat_request(const PromptBundle& bundle, const LlmSettings& settings);

// One two-turn record per pair, indexed in response order.
std::vector<InstructionRecord> make_open_qa_records(
    const ImagePairRef& pair, std::span<const QAPair> qa_pairs);

struct DatasetConfig {
  std::filesystem::path masks_dir;       // <masks_dir>/<id>.png
  std::filesystem::path captions_file;
  std::optional<std::filesystem::path> split_file;
  std::filesystem::path output_dir;
  // "{split}" and "{id}" are substituted.
  std::string image_a_pattern = "images/{split}/A/{id}.png";
  std::string image_b_pattern = "images/{split}/B/{id}.png";

  CategoryDict categories = default_categories();
  AnalysisOptions analysis;
  std::vector<TaskType> tasks = {kAllTaskTypes.begin(), kAllTaskTypes.end()};
  unsigned threads = 1;
  std::uint64_t seed = 0;
  LlmSettings llm;
  TemplateCatalog catalog = TemplateCatalog::builtin();
};

struct DatasetStats {
  std::map<Split, std::map<TaskType, std::size_t>> records;
  std::map<Split, std::size_t> pairs;
  bool open_qa_enabled = false;
  std::size_t qa_pairs_returned = 0;

  std::size_t count(Split split, TaskType task) const;
  std::size_t total(Split split) const;
  Json to_json() const;
};

struct GeneratedDataset {
  std::vector<InstructionRecord> train;
  std::vector<InstructionRecord> test;
  DatasetStats stats;
};

// Builds every enabled record type for the pairs in `source`. Open-ended QA
// records are produced only when `client` is non-null. Records come back
// sorted by (pair id, task type, index) regardless of `config.threads`.
GeneratedDataset generate_dataset(const DatasetConfig& config,
                                  const CaptionSource& source,
                                  ChatClient* client = nullptr);

// Loads the sources named in `config`, generates, and writes
// train.jsonl, test.jsonl and stats.json under config.output_dir.
DatasetStats build_dataset(const DatasetConfig& config, ChatClient* client = nullptr);

// One compact JSON object per line, LF terminated.
void write_jsonl(const std::filesystem::path& path,
                 std::span<const InstructionRecord> records);
// SchemaError carries the 1-based line number of the first bad line.
std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path);

}  // namespace rsica
