#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rsica/changemap.hpp"
#include "rsica/instructgen.hpp"
#include "rsica/json_format.hpp"

namespace rsica {

// Lowercase tokens drawn from [a-z0-9].
using TokenSeq = std::vector<std::string>;

// Lowercases, maps every character outside [a-z0-9] to a space, splits.
TokenSeq tokenize(std::string_view text);

// ---------------------------------------------------------------------------
// Captioning metrics

// Clipped n-gram statistics for BLEU. Summing the stats of several
// sentences gives corpus-level BLEU.
struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  // closest reference length, ties -> shorter

  void add(const TokenSeq& candidate, std::span<const TokenSeq> references);
  BleuStats& operator+=(const BleuStats& other);

  // BLEU-1..max_n: BP * exp(sum_{k<=n} log(p_k) / n), zero if any p_k is 0.
  std::vector<double> scores(int max_n = 4) const;
};

std::vector<double> bleu(const TokenSeq& candidate,
                         std::span<const TokenSeq> references, int max_n = 4);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

// LCS F-measure, maximised over references.
double rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references,
               double beta = 1.2);

// Exact-match METEOR: greedy leftmost unigram alignment,
// Fmean = 10PR / (R + 9P), penalty = 0.5 (chunks / matches)^3.
double meteor(const TokenSeq& candidate, std::span<const TokenSeq> references);

struct CiderResult {
  double score = 0.0;                     // corpus mean
  std::map<std::string, double> per_item;
};

// CIDEr-D with document frequencies over the reference corpus, clipped
// TF-IDF cosine, Gaussian length penalty (sigma) and the x10 scale.
// Throws InvalidArgument when the id sets differ or an item has no reference.
CiderResult cider_d(const std::map<std::string, TokenSeq>& candidates,
                    const std::map<std::string, std::vector<TokenSeq>>& references,
                    double sigma = 6.0);

// ---------------------------------------------------------------------------
// Task metrics

struct BinaryScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Positive class is "yes". A missing prediction (parse failure) is wrong.
struct BinaryOutcome {
  std::optional<bool> predicted;
  bool truth = false;
};
BinaryScores binary_metrics(std::span<const BinaryOutcome> outcomes);

struct CountScores {
  double mae = 0.0;
  double rmse = 0.0;
};
// (predicted, truth)
CountScores count_metrics(std::span<const std::pair<int, int>> pairs);

struct LocalizationScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double jaccard = 0.0;
  double subset_accuracy = 0.0;
};
// (predicted, truth). Micro P/R/F1 over the nine cell labels; when neither
// side has any positive label, P = R = F1 = 1.
LocalizationScores localization_metrics(
    std::span<const std::pair<CellSet, CellSet>> pairs);

// ---------------------------------------------------------------------------
// Free-text answer parsing

using LocalizedCells = std::vector<std::pair<std::string, CellSet>>;

// std::monostate marks a parse failure.
using TaskAnswer =
    std::variant<std::monostate, bool, CategoryCounts, LocalizedCells>;

// First standalone "yes"/"no".
std::optional<bool> parse_binary_answer(std::string_view text);

// Per category: the number nearest the first mention of the category within
// its clause (preceding number wins ties). Digits, zero..twenty and the
// quantifiers "no"/"none" are numbers. Unmentioned categories count 0.
CategoryCounts parse_quant_answer(std::string_view text,
                                  std::span<const std::string> categories);

// Per category: cell labels between its first mention and the next
// category mention.
LocalizedCells parse_localization_answer(std::string_view text,
                                         std::span<const std::string> categories);

// Dispatch on task type; caption-like tasks have no structured answer.
TaskAnswer parse_prediction(TaskType task, std::string_view text,
                            std::span<const std::string> categories);

// Words that mention `category` (singular, plural, known synonyms).
std::vector<std::string> category_keywords(std::string_view category);

// ---------------------------------------------------------------------------
// Evaluation harness

struct Prediction {
  std::string id;
  TaskType task_type = TaskType::Caption;
  std::string text;
};

// JSONL {"id","task_type","text"}; SchemaError names the 1-based line.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> predictions);

// Evaluated tasks in report order.
inline constexpr std::array<TaskType, 5> kEvaluatedTasks = {
    TaskType::Caption, TaskType::Binary, TaskType::Quant, TaskType::Localize,
    TaskType::OpenQa};

struct TaskReport {
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // reference items without a prediction
  std::vector<std::pair<std::string, double>> metrics;  // fixed key order

  std::optional<double> metric(std::string_view name) const;
};

struct EvalReport {
  // Only tasks present in the references appear.
  std::map<TaskType, TaskReport> tasks;

  Json to_json() const;
  // "task,metric,value" rows.
  std::string to_csv() const;
};

struct EvalOptions {
  std::vector<std::string> categories = {"road", "building"};
};

// Prediction ids name the image pair for caption, binary, quant and
// localize items, and the reference record for open_qa items (each QA
// record is its own item). Throws SchemaError for unknown ids and for
// duplicate (id, task) predictions.
EvalReport evaluate(std::span<const Prediction> predictions,
                    std::span<const InstructionRecord> references,
                    const EvalOptions& options = {});

EvalReport evaluate_files(const std::filesystem::path& predictions,
                          const std::filesystem::path& references,
                          const EvalOptions& options = {});

// One prediction per evaluated item, copied from the first reference answer.
std::vector<Prediction> predictions_from_references(
    std::span<const InstructionRecord> references);

}  // namespace rsica
