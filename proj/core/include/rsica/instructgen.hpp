#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsica/changemap.hpp"
#include "rsica/json_format.hpp"
#include "rsica/templates.hpp"

namespace rsica {

enum class Split { Train, Test };

// Declaration order is the sort order of records within a pair.
enum class TaskType { Caption, Binary, Quant, Localize, OpenQa, Multiturn };

inline constexpr std::array<TaskType, 6> kAllTaskTypes = {
    TaskType::Caption, TaskType::Binary,  TaskType::Quant,
    TaskType::Localize, TaskType::OpenQa, TaskType::Multiturn};

std::string_view to_string(Split split);
std::string_view to_string(TaskType task);
std::optional<Split> parse_split(std::string_view text);
std::optional<TaskType> parse_task_type(std::string_view text);

enum class Role { Human, Assistant };
std::string_view to_string(Role role);

struct ImagePairRef {
  std::string id;
  std::string image_a;
  std::string image_b;
  Split split = Split::Train;
};

struct Turn {
  Role role = Role::Human;
  std::string text;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct InstructionRecord {
  std::string id;
  ImagePairRef pair;
  TaskType task_type = TaskType::Caption;
  int index = 0;  // position among same-task records of the pair
  std::vector<Turn> turns;
};

// "<pair>:<task>:<index>"
std::string make_record_id(std::string_view pair_id, TaskType task, int index);

// Inverse of make_record_id; nullopt when `record_id` has another shape.
struct RecordKey {
  std::string pair_id;
  TaskType task_type;
  int index;
};
std::optional<RecordKey> parse_record_id(std::string_view record_id);

// Empty when the record is well formed, otherwise the first violation:
// turns alternate human/assistant, start with human, end with assistant,
// at least two turns (six for multiturn, exactly two for the rest).
std::optional<std::string> check_record(const InstructionRecord& record);

// Sort key used for every dataset file: (pair id, task type, index).
bool record_order(const InstructionRecord& a, const InstructionRecord& b);

// The JSONL line object {"id","image_a","image_b","split","task_type","turns"}.
Json record_to_json(const InstructionRecord& record);
// Throws SchemaError on a malformed object.
InstructionRecord record_from_json(const Json& j);

// "Human: <Img> <Img> Q <STOP>\nAssistant: A <STOP>\n...", image tokens on
// the first human turn only.
std::string to_training_text(const InstructionRecord& record,
                             const TemplateCatalog& catalog = TemplateCatalog::builtin());

// Answer grammars of the rule-based tasks. Categories appear in the order
// of `counts` / `cells`, which follows category ids (road, then building).
std::string pluralize(std::string_view noun);
std::string format_quant_answer(const CategoryCounts& counts);
std::string format_localization_answer(
    const std::vector<std::pair<std::string, CellSet>>& cells);

std::vector<InstructionRecord> make_caption_records(
    const ImagePairRef& pair, std::span<const std::string> captions,
    const TemplateCatalog& catalog = TemplateCatalog::builtin());

InstructionRecord make_binary_record(
    const ImagePairRef& pair, const ChangeMap& map,
    const LabelOptions& options = {},
    const TemplateCatalog& catalog = TemplateCatalog::builtin());

// `tracked` lists the category names the answer must cover; an empty list
// means "whatever `counts` holds".
InstructionRecord make_quant_record(
    const ImagePairRef& pair, const CategoryCounts& counts,
    std::span<const std::string> tracked = {},
    const TemplateCatalog& catalog = TemplateCatalog::builtin());

InstructionRecord make_localization_record(
    const ImagePairRef& pair,
    const std::vector<std::pair<std::string, CellSet>>& cells,
    const TemplateCatalog& catalog = TemplateCatalog::builtin());

// Three rounds: binary verdict, per-category counts, first caption.
InstructionRecord make_multiturn_record(
    const ImagePairRef& pair, const ChangeMap& map,
    const CategoryCounts& counts, std::span<const std::string> captions,
    const LabelOptions& options = {},
    const TemplateCatalog& catalog = TemplateCatalog::builtin());

struct PromptSeed {
  std::string input_context;
  std::string expected_output;
};

// Everything sent to the chat backend for one pair; carries no image data.
struct PromptBundle {
  std::string system;
  std::vector<PromptSeed> seeds;
  std::string payload;
};

// "Change Captions:" / "Change Counts:" / "Change Contours:" sections.
std::string format_prompt_context(std::span<const std::string> captions,
                                  const Json& counts, const Json& contours);

// Requires exactly five captions.
PromptBundle make_openended_prompt(
    std::span<const std::string> captions, const CategoryCounts& counts,
    const std::vector<std::pair<std::string, std::vector<NormalizedContour>>>&
        contours,
    const TemplateCatalog& catalog = TemplateCatalog::builtin());

}  // namespace rsica
