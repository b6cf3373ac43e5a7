#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "rsica/dataset.hpp"
#include "rsica/error.hpp"
#include "rsica/log.hpp"
#include "rsica/metrics.hpp"

namespace rsica {

namespace {

// One scored unit: an image pair (or an open_qa record) for one task.
struct RefItem {
  std::vector<std::string> answers;  // assistant answers, in record order
};

using ItemTable = std::map<TaskType, std::map<std::string, RefItem>>;

bool is_evaluated(TaskType task) {
  return std::find(kEvaluatedTasks.begin(), kEvaluatedTasks.end(), task) !=
         kEvaluatedTasks.end();
}

const std::string& final_answer(const InstructionRecord& record) {
  if (record.turns.empty() || record.turns.back().role != Role::Assistant) {
    throw SchemaError("record '" + record.id + "' has no final assistant turn");
  }
  return record.turns.back().text;
}

ItemTable collect_items(std::span<const InstructionRecord> references) {
  ItemTable items;
  for (const InstructionRecord& record : references) {
    if (!is_evaluated(record.task_type)) continue;
    const std::string& key =
        record.task_type == TaskType::OpenQa ? record.id : record.pair.id;
    items[record.task_type][key].answers.push_back(final_answer(record));
  }
  return items;
}

TaskReport caption_report(const std::map<std::string, RefItem>& items,
                          const std::map<std::string, const Prediction*>& predicted) {
  TaskReport report;
  BleuStats stats;
  double rouge_sum = 0.0;
  double meteor_sum = 0.0;
  std::map<std::string, TokenSeq> candidates;
  std::map<std::string, std::vector<TokenSeq>> references;
  for (const auto& [id, item] : items) {
    const auto it = predicted.find(id);
    if (it == predicted.end()) {
      ++report.skipped;
      continue;
    }
    ++report.evaluated;
    TokenSeq candidate = tokenize(it->second->text);
    std::vector<TokenSeq> refs;
    for (const std::string& answer : item.answers) refs.push_back(tokenize(answer));
    stats.add(candidate, refs);
    rouge_sum += rouge_l(candidate, refs);
    meteor_sum += meteor(candidate, refs);
    candidates.emplace(id, std::move(candidate));
    references.emplace(id, std::move(refs));
  }
  std::vector<double> bleu_scores(4, 0.0);
  double cider = 0.0;
  const double n = static_cast<double>(report.evaluated);
  if (report.evaluated > 0) {
    bleu_scores = stats.scores(4);
    cider = cider_d(candidates, references).score;
  }
  for (int k = 0; k < 4; ++k) {
    report.metrics.emplace_back("bleu_" + std::to_string(k + 1), bleu_scores[k]);
  }
  report.metrics.emplace_back("meteor", n > 0 ? meteor_sum / n : 0.0);
  report.metrics.emplace_back("rouge_l", n > 0 ? rouge_sum / n : 0.0);
  report.metrics.emplace_back("cider", cider);
  return report;
}

TaskReport binary_report(const std::map<std::string, RefItem>& items,
                         const std::map<std::string, const Prediction*>& predicted) {
  TaskReport report;
  std::vector<BinaryOutcome> outcomes;
  for (const auto& [id, item] : items) {
    const auto it = predicted.find(id);
    if (it == predicted.end()) {
      ++report.skipped;
      continue;
    }
    const auto truth = parse_binary_answer(item.answers.front());
    if (!truth) throw SchemaError("reference binary answer for '" + id + "' is not yes/no");
    ++report.evaluated;
    outcomes.push_back({parse_binary_answer(it->second->text), *truth});
  }
  BinaryScores s;
  if (!outcomes.empty()) s = binary_metrics(outcomes);
  report.metrics = {{"accuracy", s.accuracy},
                    {"precision", s.precision},
                    {"recall", s.recall},
                    {"f1", s.f1}};
  return report;
}

TaskReport quant_report(const std::map<std::string, RefItem>& items,
                        const std::map<std::string, const Prediction*>& predicted,
                        const std::vector<std::string>& categories) {
  TaskReport report;
  std::vector<std::pair<int, int>> all;
  std::vector<std::vector<std::pair<int, int>>> per_category(categories.size());
  for (const auto& [id, item] : items) {
    const auto it = predicted.find(id);
    if (it == predicted.end()) {
      ++report.skipped;
      continue;
    }
    ++report.evaluated;
    const CategoryCounts truth = parse_quant_answer(item.answers.front(), categories);
    const CategoryCounts guess = parse_quant_answer(it->second->text, categories);
    for (std::size_t c = 0; c < categories.size(); ++c) {
      const std::pair<int, int> pair{guess.get(categories[c]).value_or(0),
                                     truth.get(categories[c]).value_or(0)};
      all.push_back(pair);
      per_category[c].push_back(pair);
    }
  }
  const auto scores = [](const std::vector<std::pair<int, int>>& pairs) {
    return pairs.empty() ? CountScores{} : count_metrics(pairs);
  };
  const CountScores overall = scores(all);
  report.metrics = {{"mae", overall.mae}, {"rmse", overall.rmse}};
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const CountScores s = scores(per_category[c]);
    report.metrics.emplace_back(categories[c] + "_mae", s.mae);
    report.metrics.emplace_back(categories[c] + "_rmse", s.rmse);
  }
  return report;
}

void append_localization(TaskReport& report, const std::string& prefix,
                         const std::vector<std::pair<CellSet, CellSet>>& pairs) {
  LocalizationScores s;
  if (!pairs.empty()) s = localization_metrics(pairs);
  report.metrics.emplace_back(prefix + "precision", s.precision);
  report.metrics.emplace_back(prefix + "recall", s.recall);
  report.metrics.emplace_back(prefix + "f1", s.f1);
  report.metrics.emplace_back(prefix + "jaccard", s.jaccard);
  report.metrics.emplace_back(prefix + "subset_accuracy", s.subset_accuracy);
}

// Pooled scores treat each (item, category) as one multi-label sample.
TaskReport localize_report(const std::map<std::string, RefItem>& items,
                           const std::map<std::string, const Prediction*>& predicted,
                           const std::vector<std::string>& categories) {
  TaskReport report;
  std::vector<std::pair<CellSet, CellSet>> all;
  std::vector<std::vector<std::pair<CellSet, CellSet>>> per_category(categories.size());
  for (const auto& [id, item] : items) {
    const auto it = predicted.find(id);
    if (it == predicted.end()) {
      ++report.skipped;
      continue;
    }
    ++report.evaluated;
    const LocalizedCells truth =
        parse_localization_answer(item.answers.front(), categories);
    const LocalizedCells guess = parse_localization_answer(it->second->text, categories);
    for (std::size_t c = 0; c < categories.size(); ++c) {
      const std::pair<CellSet, CellSet> pair{guess[c].second, truth[c].second};
      all.push_back(pair);
      per_category[c].push_back(pair);
    }
  }
  append_localization(report, "", all);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    append_localization(report, categories[c] + "_", per_category[c]);
  }
  return report;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw Error("cannot format metric value");
  return std::string(buffer, end);
}

}  // namespace

std::optional<double> TaskReport::metric(std::string_view name) const {
  for (const auto& [key, value] : metrics) {
    if (key == name) return value;
  }
  return std::nullopt;
}

Json EvalReport::to_json() const {
  Json tasks_json = Json::object();
  for (const auto& [task, report] : tasks) {
    Json metrics_json = Json::object();
    for (const auto& [name, value] : report.metrics) metrics_json[name] = value;
    tasks_json[std::string(to_string(task))] = {{"evaluated", report.evaluated},
                                               {"skipped", report.skipped},
                                               {"metrics", metrics_json}};
  }
  return Json{{"schema", "rsica.eval/v1"}, {"tasks", tasks_json}};
}

std::string EvalReport::to_csv() const {
  std::string out = "task,metric,value\n";
  for (const auto& [task, report] : tasks) {
    const std::string name(to_string(task));
    out += name + ",evaluated," + std::to_string(report.evaluated) + "\n";
    out += name + ",skipped," + std::to_string(report.skipped) + "\n";
    for (const auto& [metric, value] : report.metrics) {
      out += name + "," + metric + "," + format_double(value) + "\n";
    }
  }
  return out;
}

EvalReport evaluate(std::span<const Prediction> predictions,
                    std::span<const InstructionRecord> references,
                    const EvalOptions& options) {
  const ItemTable items = collect_items(references);

  std::map<TaskType, std::map<std::string, const Prediction*>> predicted;
  for (const Prediction& p : predictions) {
    if (!is_evaluated(p.task_type)) {
      log::warn("ignoring prediction '" + p.id + "' for unevaluated task " +
                std::string(to_string(p.task_type)));
      continue;
    }
    const auto task_items = items.find(p.task_type);
    if (task_items == items.end() || !task_items->second.contains(p.id)) {
      throw SchemaError("prediction id '" + p.id + "' (" +
                        std::string(to_string(p.task_type)) +
                        ") does not match any reference item");
    }
    if (!predicted[p.task_type].emplace(p.id, &p).second) {
      throw SchemaError("duplicate prediction for id '" + p.id + "' (" +
                        std::string(to_string(p.task_type)) + ")");
    }
  }

  EvalReport report;
  for (const auto& [task, task_items] : items) {
    const auto& task_predictions = predicted[task];
    switch (task) {
      case TaskType::Caption:
      case TaskType::OpenQa:
        report.tasks[task] = caption_report(task_items, task_predictions);
        break;
      case TaskType::Binary:
        report.tasks[task] = binary_report(task_items, task_predictions);
        break;
      case TaskType::Quant:
        report.tasks[task] = quant_report(task_items, task_predictions, options.categories);
        break;
      case TaskType::Localize:
        report.tasks[task] =
            localize_report(task_items, task_predictions, options.categories);
        break;
      case TaskType::Multiturn:
        break;
    }
  }
  return report;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Prediction> predictions;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (!j.is_object()) throw SchemaError("expected a JSON object");
      Prediction p;
      p.id = j.at("id").get<std::string>();
      const auto task = parse_task_type(j.at("task_type").get<std::string>());
      if (!task) throw SchemaError("unknown task_type");
      p.task_type = *task;
      p.text = j.at("text").get<std::string>();
      predictions.push_back(std::move(p));
    } catch (const Json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what(), line_number);
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ": " + e.what(), line_number);
    }
  }
  return predictions;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const Prediction& p : predictions) {
    const Json j = {{"id", p.id},
                    {"task_type", std::string(to_string(p.task_type))},
                    {"text", p.text}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EvalReport evaluate_files(const std::filesystem::path& predictions,
                          const std::filesystem::path& references,
                          const EvalOptions& options) {
  const auto refs = read_jsonl(references);
  const auto preds = read_predictions(predictions);
  return evaluate(preds, refs, options);
}

std::vector<Prediction> predictions_from_references(
    std::span<const InstructionRecord> references) {
  std::vector<Prediction> predictions;
  std::set<std::pair<TaskType, std::string>> seen;
  for (const InstructionRecord& record : references) {
    if (!is_evaluated(record.task_type)) continue;
    const std::string id =
        record.task_type == TaskType::OpenQa ? record.id : record.pair.id;
    if (!seen.emplace(record.task_type, id).second) continue;
    predictions.push_back({id, record.task_type, final_answer(record)});
  }
  return predictions;
}

}  // namespace rsica
