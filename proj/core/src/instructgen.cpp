#include "rsica/instructgen.hpp"

#include <algorithm>
#include <charconv>
#include <tuple>

#include "rsica/error.hpp"

namespace rsica {

namespace {

constexpr std::array<std::string_view, 6> kTaskNames = {
    "caption", "binary", "quant", "localize", "open_qa", "multiturn"};

InstructionRecord two_turn(const ImagePairRef& pair, TaskType task, int index,
                           std::string question, std::string answer) {
  InstructionRecord r;
  r.id = make_record_id(pair.id, task, index);
  r.pair = pair;
  r.task_type = task;
  r.index = index;
  r.turns = {{Role::Human, std::move(question)},
             {Role::Assistant, std::move(answer)}};
  return r;
}

std::string require_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw SchemaError(std::string("record: missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

}  // namespace

std::string_view to_string(Split split) {
  return split == Split::Train ? "train" : "test";
}

std::string_view to_string(TaskType task) {
  return kTaskNames[static_cast<std::size_t>(task)];
}

std::string_view to_string(Role role) {
  return role == Role::Human ? "human" : "assistant";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  return std::nullopt;
}

std::optional<TaskType> parse_task_type(std::string_view text) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
    if (kTaskNames[i] == text) return static_cast<TaskType>(i);
  }
  return std::nullopt;
}

std::string make_record_id(std::string_view pair_id, TaskType task, int index) {
  std::string id(pair_id);
  id += ':';
  id += to_string(task);
  id += ':';
  id += std::to_string(index);
  return id;
}

std::optional<RecordKey> parse_record_id(std::string_view record_id) {
  const auto last = record_id.rfind(':');
  if (last == std::string_view::npos || last == 0) return std::nullopt;
  const auto middle = record_id.rfind(':', last - 1);
  if (middle == std::string_view::npos) return std::nullopt;

  const auto task = parse_task_type(record_id.substr(middle + 1, last - middle - 1));
  const std::string_view digits = record_id.substr(last + 1);
  int index = 0;
  const auto [end, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (!task || ec != std::errc{} || end != digits.data() + digits.size() ||
      digits.empty()) {
    return std::nullopt;
  }
  return RecordKey{std::string(record_id.substr(0, middle)), *task, index};
}

std::optional<std::string> check_record(const InstructionRecord& record) {
  const auto& turns = record.turns;
  if (turns.size() < 2) return "fewer than two turns";
  if (turns.size() % 2 != 0) return "odd number of turns";
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Role expected = i % 2 == 0 ? Role::Human : Role::Assistant;
    if (turns[i].role != expected) {
      return "turn " + std::to_string(i) + " has role " +
             std::string(to_string(turns[i].role));
    }
    if (turns[i].text.empty()) return "turn " + std::to_string(i) + " is empty";
  }
  if (record.task_type == TaskType::Multiturn && turns.size() < 6) {
    return "multiturn record needs at least three rounds";
  }
  if (record.task_type != TaskType::Multiturn && turns.size() != 2) {
    return "single-round record has " + std::to_string(turns.size()) + " turns";
  }
  return std::nullopt;
}

bool record_order(const InstructionRecord& a, const InstructionRecord& b) {
  return std::tie(a.pair.id, a.task_type, a.index) <
         std::tie(b.pair.id, b.task_type, b.index);
}

Json record_to_json(const InstructionRecord& record) {
  Json j = Json::object();
  j["id"] = record.id;
  j["image_a"] = record.pair.image_a;
  j["image_b"] = record.pair.image_b;
  j["split"] = std::string(to_string(record.pair.split));
  j["task_type"] = std::string(to_string(record.task_type));
  Json turns = Json::array();
  for (const Turn& t : record.turns) {
    Json turn = Json::object();
    turn["role"] = std::string(to_string(t.role));
    turn["text"] = t.text;
    turns.push_back(std::move(turn));
  }
  j["turns"] = std::move(turns);
  return j;
}

InstructionRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("record: expected a JSON object");
  InstructionRecord r;
  r.id = require_string(j, "id");
  r.pair.image_a = require_string(j, "image_a");
  r.pair.image_b = require_string(j, "image_b");

  const auto split = parse_split(require_string(j, "split"));
  if (!split) throw SchemaError("record: split must be 'train' or 'test'");
  r.pair.split = *split;
  const auto task = parse_task_type(require_string(j, "task_type"));
  if (!task) throw SchemaError("record: unknown task_type");
  r.task_type = *task;

  const auto key = parse_record_id(r.id);
  if (key && key->task_type == r.task_type) {
    r.pair.id = key->pair_id;
    r.index = key->index;
  } else {
    r.pair.id = r.id;
  }

  if (!j.contains("turns") || !j["turns"].is_array()) {
    throw SchemaError("record: missing 'turns' array");
  }
  for (const Json& t : j["turns"]) {
    if (!t.is_object()) throw SchemaError("record: turn must be an object");
    const std::string role = require_string(t, "role");
    Turn turn;
    if (role == "human") {
      turn.role = Role::Human;
    } else if (role == "assistant") {
      turn.role = Role::Assistant;
    } else {
      throw SchemaError("record: unknown role '" + role + "'");
    }
    turn.text = require_string(t, "text");
    r.turns.push_back(std::move(turn));
  }
  return r;
}

std::string to_training_text(const InstructionRecord& record,
                             const TemplateCatalog& catalog) {
  std::string out;
  bool first_human = true;
  for (const Turn& t : record.turns) {
    if (t.role == Role::Human) {
      out += "Human: ";
      if (first_human) {
        out += catalog.image_token + " " + catalog.image_token + " ";
        first_human = false;
      }
    } else {
      out += "Assistant: ";
    }
    out += t.text;
    out += ' ';
    out += catalog.stop_token;
    out += '\n';
  }
  return out;
}

std::string pluralize(std::string_view noun) { return std::string(noun) + "s"; }

std::string format_quant_answer(const CategoryCounts& counts) {
  const auto& entries = counts.entries();
  if (entries.empty()) return "There are no changes.";

  std::vector<std::string> parts;
  for (const auto& [name, count] : entries) {
    if (count == 0) {
      parts.push_back("no new " + pluralize(name));
    } else if (count == 1) {
      parts.push_back("1 new " + name);
    } else {
      parts.push_back(std::to_string(count) + " new " + pluralize(name));
    }
  }
  std::string text = entries.front().second == 1 ? "There is " : "There are ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) text += (i + 1 == parts.size()) ? " and " : ", ";
    text += parts[i];
  }
  text += '.';
  return text;
}

std::string format_localization_answer(
    const std::vector<std::pair<std::string, CellSet>>& cells) {
  std::string text;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) text += "; ";
    text += pluralize(cells[i].first) + ": ";
    const std::vector<Cell> members = cells[i].second.cells();
    if (members.empty()) {
      text += "none";
      continue;
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k > 0) text += ", ";
      text += cell_label(members[k]);
    }
  }
  return text;
}

std::vector<InstructionRecord> make_caption_records(
    const ImagePairRef& pair, std::span<const std::string> captions,
    const TemplateCatalog& catalog) {
  if (captions.empty()) {
    throw InvalidArgument("pair '" + pair.id + "' has no captions");
  }
  std::vector<InstructionRecord> records;
  records.reserve(captions.size());
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (captions[i].empty()) {
      throw InvalidArgument("pair '" + pair.id + "' caption " +
                            std::to_string(i) + " is empty");
    }
    records.push_back(two_turn(pair, TaskType::Caption, static_cast<int>(i),
                               catalog.caption, captions[i]));
  }
  return records;
}

InstructionRecord make_binary_record(const ImagePairRef& pair,
                                     const ChangeMap& map,
                                     const LabelOptions& options,
                                     const TemplateCatalog& catalog) {
  return two_turn(pair, TaskType::Binary, 0, catalog.binary,
                  has_change(map, options) ? "yes" : "no");
}

InstructionRecord make_quant_record(const ImagePairRef& pair,
                                    const CategoryCounts& counts,
                                    std::span<const std::string> tracked,
                                    const TemplateCatalog& catalog) {
  CategoryCounts answer = counts;
  if (!tracked.empty()) {
    answer = CategoryCounts{};
    for (const std::string& name : tracked) {
      const auto count = counts.get(name);
      if (!count) {
        throw InvalidArgument("pair '" + pair.id + "': no count for category '" +
                              name + "'");
      }
      answer.set(name, *count);
    }
  }
  return two_turn(pair, TaskType::Quant, 0, catalog.quant,
                  format_quant_answer(answer));
}

InstructionRecord make_localization_record(
    const ImagePairRef& pair,
    const std::vector<std::pair<std::string, CellSet>>& cells,
    const TemplateCatalog& catalog) {
  return two_turn(pair, TaskType::Localize, 0, catalog.localize,
                  format_localization_answer(cells));
}

InstructionRecord make_multiturn_record(const ImagePairRef& pair,
                                        const ChangeMap& map,
                                        const CategoryCounts& counts,
                                        std::span<const std::string> captions,
                                        const LabelOptions& options,
                                        const TemplateCatalog& catalog) {
  if (captions.empty() || captions.front().empty()) {
    throw InvalidArgument("pair '" + pair.id + "' has no caption for the final round");
  }
  InstructionRecord r;
  r.id = make_record_id(pair.id, TaskType::Multiturn, 0);
  r.pair = pair;
  r.task_type = TaskType::Multiturn;
  r.turns = {
      {Role::Human, catalog.multiturn[0]},
      {Role::Assistant, has_change(map, options) ? "yes" : "no"},
      {Role::Human, catalog.multiturn[1]},
      {Role::Assistant, format_quant_answer(counts)},
      {Role::Human, catalog.multiturn[2]},
      {Role::Assistant, captions.front()},
  };
  return r;
}

std::string format_prompt_context(std::span<const std::string> captions,
                                  const Json& counts, const Json& contours) {
  std::string text = "Change Captions:\n";
  for (const std::string& c : captions) text += "- " + c + "\n";
  text += "Change Counts:\n" + dump_inline(counts) + "\n";
  text += "Change Contours:\n" + dump_inline(contours) + "\n";
  return text;
}

PromptBundle make_openended_prompt(
    std::span<const std::string> captions, const CategoryCounts& counts,
    const std::vector<std::pair<std::string, std::vector<NormalizedContour>>>&
        contours,
    const TemplateCatalog& catalog) {
  if (captions.size() != 5) {
    throw InvalidArgument("open-ended prompt needs exactly 5 captions, got " +
                          std::to_string(captions.size()));
  }
  PromptBundle bundle;
  bundle.system = catalog.open_qa_system;
  for (const SeedExample& seed : catalog.seeds) {
    bundle.seeds.push_back(
        {format_prompt_context(seed.captions, seed.counts, seed.contours),
         seed.output});
  }
  bundle.payload = format_prompt_context(captions, counts_to_json(counts),
                                         contours_to_json(contours));
  return bundle;
}

}  // namespace rsica
