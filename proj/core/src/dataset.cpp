#include "rsica/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include "rsica/error.hpp"
#include "rsica/log.hpp"

namespace rsica {

namespace {

std::string substitute(std::string pattern, const std::string& id, Split split) {
  const auto replace_all = [&pattern](std::string_view key, std::string_view value) {
    for (auto pos = pattern.find(key); pos != std::string::npos;
         pos = pattern.find(key, pos + value.size())) {
      pattern.replace(pos, key.size(), value);
    }
  };
  replace_all("{split}", to_string(split));
  replace_all("{id}", id);
  return pattern;
}

bool enabled(const DatasetConfig& config, TaskType task) {
  return std::find(config.tasks.begin(), config.tasks.end(), task) !=
         config.tasks.end();
}

bool needs_map(const DatasetConfig& config) {
  for (TaskType t : {TaskType::Binary, TaskType::Quant, TaskType::Localize,
                     TaskType::OpenQa, TaskType::Multiturn}) {
    if (enabled(config, t)) return true;
  }
  return false;
}

Json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

struct PairOutput {
  std::vector<InstructionRecord> records;
  std::size_t qa_pairs = 0;
};

PairOutput records_for_pair(const DatasetConfig& config, const std::string& id,
                            const CaptionEntry& entry, ChatClient* client) {
  const ImagePairRef pair{id, substitute(config.image_a_pattern, id, entry.split),
                          substitute(config.image_b_pattern, id, entry.split),
                          entry.split};
  PairOutput out;
  auto append = [&out](std::vector<InstructionRecord> records) {
    for (auto& r : records) out.records.push_back(std::move(r));
  };

  if (enabled(config, TaskType::Caption)) {
    append(make_caption_records(pair, entry.captions, config.catalog));
  }
  if (!needs_map(config)) return out;

  const auto mask_path = config.masks_dir / (id + ".png");
  if (!std::filesystem::exists(mask_path)) {
    throw IoError("missing change map '" + mask_path.string() + "'");
  }
  const ChangeMap map = load_change_map(mask_path, config.categories);
  const ChangeAnalysis analysis = analyze_change_map(map, id, config.analysis);
  const LabelOptions& label = config.analysis.label;

  if (enabled(config, TaskType::Binary)) {
    out.records.push_back(make_binary_record(pair, map, label, config.catalog));
  }
  if (enabled(config, TaskType::Quant)) {
    out.records.push_back(make_quant_record(pair, analysis.counts, {}, config.catalog));
  }
  if (enabled(config, TaskType::Localize)) {
    out.records.push_back(make_localization_record(pair, analysis.cells, config.catalog));
  }
  if (enabled(config, TaskType::OpenQa) && client != nullptr) {
    const PromptBundle bundle = make_openended_prompt(
        entry.captions, analysis.counts, analysis.contours, config.catalog);
    const std::string reply = client->complete(to_chat_request(bundle, config.llm));
    const std::vector<QAPair> qa = parse_qa_pairs(reply);
    if (qa.empty()) log::warn("pair '" + id + "': backend reply held no QA pairs");
    out.qa_pairs = qa.size();
    append(make_open_qa_records(pair, qa));
  }
  if (enabled(config, TaskType::Multiturn)) {
    out.records.push_back(make_multiturn_record(pair, map, analysis.counts,
                                                entry.captions, label,
                                                config.catalog));
  }
  return out;
}

}  // namespace

CaptionSource caption_source_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("caption source must be a JSON object");
  CaptionSource source;
  for (const auto& [id, value] : j.items()) {
    if (id.empty()) throw SchemaError("caption source: empty pair id");
    if (!value.is_object() || !value.contains("split") ||
        !value["split"].is_string() || !value.contains("captions") ||
        !value["captions"].is_array()) {
      throw SchemaError("caption source: pair '" + id +
                        "' needs 'split' and 'captions'");
    }
    const auto split = parse_split(value["split"].get<std::string>());
    if (!split) {
      throw SchemaError("caption source: pair '" + id + "' has split '" +
                        value["split"].get<std::string>() + "'");
    }
    CaptionEntry entry{*split, {}};
    for (const Json& c : value["captions"]) {
      if (!c.is_string()) {
        throw SchemaError("caption source: pair '" + id + "' has a non-string caption");
      }
      entry.captions.push_back(c.get<std::string>());
    }
    source.emplace(id, std::move(entry));
  }
  return source;
}

Json caption_source_to_json(const CaptionSource& source) {
  Json j = Json::object();
  for (const auto& [id, entry] : source) {
    j[id] = {{"split", std::string(to_string(entry.split))},
             {"captions", entry.captions}};
  }
  return j;
}

CaptionSource load_caption_source(const std::filesystem::path& path) {
  try {
    return caption_source_from_json(parse_json_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::map<std::string, Split> load_split_file(const std::filesystem::path& path) {
  const Json j = parse_json_file(path);
  if (!j.is_object()) throw SchemaError(path.string() + ": expected a JSON object");
  std::map<std::string, Split> splits;
  for (const auto& [id, value] : j.items()) {
    const auto split = value.is_string() ? parse_split(value.get<std::string>())
                                         : std::nullopt;
    if (!split) {
      throw SchemaError(path.string() + ": pair '" + id + "' has an invalid split");
    }
    splits.emplace(id, *split);
  }
  return splits;
}

LevirConversion convert_levir_cc(const Json& levir) {
  if (!levir.is_object() || !levir.contains("images") || !levir["images"].is_array()) {
    throw SchemaError("LEVIR-CC captions: missing 'images' array");
  }
  LevirConversion result;
  for (const Json& image : levir["images"]) {
    if (!image.contains("filename") || !image.contains("split") ||
        !image.contains("sentences")) {
      throw SchemaError("LEVIR-CC captions: entry lacks filename/split/sentences");
    }
    const auto split = parse_split(image["split"].get<std::string>());
    if (!split) {
      ++result.skipped;
      continue;
    }
    std::string id = image["filename"].get<std::string>();
    if (const auto dot = id.rfind('.'); dot != std::string::npos) id.resize(dot);

    CaptionEntry entry{*split, {}};
    for (const Json& sentence : image["sentences"]) {
      std::string raw = sentence.value("raw", std::string{});
      const auto first = raw.find_first_not_of(" \t\r\n");
      const auto last = raw.find_last_not_of(" \t\r\n");
      if (first == std::string::npos) continue;
      entry.captions.push_back(raw.substr(first, last - first + 1));
    }
    if (!result.source.emplace(id, std::move(entry)).second) {
      throw SchemaError("LEVIR-CC captions: duplicate filename '" + id + "'");
    }
  }
  return result;
}

ChatRequest to_chat_request(const PromptBundle& bundle, const LlmSettings& settings) {
  ChatRequest request;
  request.system = bundle.system;
  for (const PromptSeed& seed : bundle.seeds) {
    request.messages.push_back({"user", seed.input_context});
    request.messages.push_back({"assistant", seed.expected_output});
  }
  request.messages.push_back({"user", bundle.payload});
  request.temperature = settings.temperature;
  request.max_tokens = settings.max_tokens;
  request.model_name = settings.model;
  return request;
}

std::vector<InstructionRecord> make_open_qa_records(const ImagePairRef& pair,
                                                    std::span<const QAPair> qa_pairs) {
  std::vector<InstructionRecord> records;
  for (std::size_t i = 0; i < qa_pairs.size(); ++i) {
    InstructionRecord r;
    r.id = make_record_id(pair.id, TaskType::OpenQa, static_cast<int>(i));
    r.pair = pair;
    r.task_type = TaskType::OpenQa;
    r.index = static_cast<int>(i);
    r.turns = {{Role::Human, qa_pairs[i].question},
               {Role::Assistant, qa_pairs[i].answer}};
    records.push_back(std::move(r));
  }
  return records;
}

std::size_t DatasetStats::count(Split split, TaskType task) const {
  const auto s = records.find(split);
  if (s == records.end()) return 0;
  const auto t = s->second.find(task);
  return t == s->second.end() ? 0 : t->second;
}

std::size_t DatasetStats::total(Split split) const {
  std::size_t sum = 0;
  for (TaskType t : kAllTaskTypes) sum += count(split, t);
  return sum;
}

Json DatasetStats::to_json() const {
  Json j = Json::object();
  for (Split split : {Split::Train, Split::Test}) {
    Json s = Json::object();
    const auto p = pairs.find(split);
    s["pairs"] = p == pairs.end() ? 0 : p->second;
    for (TaskType t : kAllTaskTypes) s[std::string(to_string(t))] = count(split, t);
    s["total"] = total(split);
    j[std::string(to_string(split))] = std::move(s);
  }
  j["open_qa_enabled"] = open_qa_enabled;
  j["qa_pairs_returned"] = qa_pairs_returned;
  return j;
}

GeneratedDataset generate_dataset(const DatasetConfig& config,
                                  const CaptionSource& source, ChatClient* client) {
  const std::vector<std::pair<std::string, CaptionEntry>> pairs(source.begin(),
                                                                source.end());
  std::vector<PairOutput> outputs(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        outputs[i] = records_for_pair(config, pairs[i].first, pairs[i].second, client);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(config.threads,
                                      static_cast<unsigned>(std::max<std::size_t>(1, pairs.size()))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  // Report the failure of the first pair in id order, whatever the schedule.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  GeneratedDataset dataset;
  dataset.stats.open_qa_enabled = client != nullptr && enabled(config, TaskType::OpenQa);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Split split = pairs[i].second.split;
    ++dataset.stats.pairs[split];
    dataset.stats.qa_pairs_returned += outputs[i].qa_pairs;
    auto& bucket = split == Split::Train ? dataset.train : dataset.test;
    for (auto& record : outputs[i].records) {
      if (const auto problem = check_record(record)) {
        throw Error("record '" + record.id + "' is malformed: " + *problem);
      }
      ++dataset.stats.records[split][record.task_type];
      bucket.push_back(std::move(record));
    }
  }
  std::sort(dataset.train.begin(), dataset.train.end(), record_order);
  std::sort(dataset.test.begin(), dataset.test.end(), record_order);
  return dataset;
}

DatasetStats build_dataset(const DatasetConfig& config, ChatClient* client) {
  CaptionSource source = load_caption_source(config.captions_file);
  if (config.split_file) {
    const auto splits = load_split_file(*config.split_file);
    for (const auto& [id, entry] : source) {
      const auto it = splits.find(id);
      if (it == splits.end()) {
        throw SchemaError("inconsistent split assignment: pair '" + id +
                          "' is missing from " + config.split_file->string());
      }
      if (it->second != entry.split) {
        throw SchemaError("inconsistent split assignment: pair '" + id + "' is " +
                          std::string(to_string(entry.split)) +
                          " in the captions file but " +
                          std::string(to_string(it->second)) + " in the split file");
      }
    }
    for (const auto& [id, split] : splits) {
      if (!source.contains(id)) {
        throw SchemaError("inconsistent split assignment: pair '" + id +
                          "' has a split but no captions");
      }
    }
  }
  if (needs_map(config) && !std::filesystem::is_directory(config.masks_dir)) {
    throw IoError("masks directory '" + config.masks_dir.string() + "' does not exist");
  }
  if (enabled(config, TaskType::OpenQa) && client == nullptr) {
    log::warn("no LLM backend configured; open_qa records are skipped");
  }

  const GeneratedDataset dataset = generate_dataset(config, source, client);

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + config.output_dir.string() +
                  "': " + ec.message());
  }
  write_jsonl(config.output_dir / "train.jsonl", dataset.train);
  write_jsonl(config.output_dir / "test.jsonl", dataset.test);

  const auto stats_path = config.output_dir / "stats.json";
  std::ofstream stats(stats_path, std::ios::binary | std::ios::trunc);
  stats << dataset.stats.to_json().dump(2) << '\n';
  if (!stats) throw IoError("cannot write '" + stats_path.string() + "'");
  return dataset.stats;
}

void write_jsonl(const std::filesystem::path& path,
                 std::span<const InstructionRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const InstructionRecord& r : records) {
    out << record_to_json(r).dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<InstructionRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what(), line_number);
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ": " + e.what(), line_number);
    }
  }
  return records;
}

}  // namespace rsica
