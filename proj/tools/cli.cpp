#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "rsica/config.hpp"
#include "rsica/dataset.hpp"
#include "rsica/error.hpp"
#include "rsica/json_format.hpp"
#include "rsica/kernel/verify.hpp"
#include "rsica/log.hpp"
#include "rsica/metrics.hpp"

namespace rsica::cli {

namespace fs = std::filesystem;

namespace {

// Values given on the command line; unset ones keep the config file value.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> masks;
  std::optional<std::string> captions;
  std::optional<std::string> split_file;
  std::optional<std::string> out;
  std::optional<std::string> cache;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> connectivity;
  std::optional<std::size_t> min_area;
  std::optional<int> grid;
  std::optional<double> threshold;
  std::optional<std::string> tasks;
  std::optional<std::string> backend;
};

RunConfig resolve_config(const Overrides& o) {
  RunConfig config = o.config ? load_run_config(*o.config) : RunConfig{};
  if (o.masks) config.masks_dir = *o.masks;
  if (o.captions) config.captions_file = *o.captions;
  if (o.split_file) config.split_file = fs::path(*o.split_file);
  if (o.out) config.output_dir = *o.out;
  if (o.cache) config.cache_dir = fs::path(*o.cache);
  if (o.seed) config.seed = *o.seed;
  if (o.threads) config.threads = *o.threads;
  if (o.connectivity) {
    config.analysis.label.connectivity =
        *o.connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
  }
  if (o.min_area) config.analysis.label.min_area = *o.min_area;
  if (o.grid) config.analysis.grid.grid = *o.grid;
  if (o.threshold) config.analysis.grid.threshold = *o.threshold;
  if (o.tasks) {
    config.tasks.clear();
    std::stringstream list(*o.tasks);
    std::string name;
    while (std::getline(list, name, ',')) {
      const auto task = parse_task_type(name);
      if (!task) throw InvalidArgument("unknown task type '" + name + "'");
      config.tasks.push_back(*task);
    }
  }
  if (o.backend) {
    if (*o.backend == "none") config.llm.backend = BackendKind::None;
    else if (*o.backend == "mock") config.llm.backend = BackendKind::Mock;
    else if (*o.backend == "remote") config.llm.backend = BackendKind::Remote;
    else throw InvalidArgument("unknown backend '" + *o.backend + "'");
  }
  validate(config);
  return config;
}

std::vector<std::string> category_names(const RunConfig& config) {
  std::vector<std::string> names;
  for (const auto& [id, name] : config.categories) {
    if (id != 0) names.push_back(name);
  }
  return names;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  file << text;
  file.flush();
  if (!file) throw IoError("write to '" + path.string() + "' failed");
}

void emit(const std::optional<std::string>& path, const std::string& text,
          std::ostream& out) {
  if (path) write_text(*path, text);
  else out << text;
}

std::vector<std::string> mask_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

int cmd_analyze(const Overrides& o, const std::vector<std::string>& requested,
                int decimals, std::ostream& out) {
  RunConfig config = resolve_config(o);
  if (decimals >= 0) config.analysis.contour_decimals = decimals;
  validate(config);
  if (config.masks_dir.empty()) throw InvalidArgument("no masks directory configured");
  if (!fs::is_directory(config.masks_dir)) {
    throw IoError("masks directory '" + config.masks_dir.string() + "' does not exist");
  }
  const std::vector<std::string> ids =
      requested.empty() ? mask_ids(config.masks_dir) : requested;
  const fs::path target = config.output_dir / "analysis";
  fs::create_directories(target);
  for (const std::string& id : ids) {
    const ChangeMap map =
        load_change_map(config.masks_dir / (id + ".png"), config.categories);
    const ChangeAnalysis analysis = analyze_change_map(map, id, config.analysis);
    write_text(target / (id + ".json"), analysis_to_json(analysis).dump(2) + "\n");
  }
  out << "analyzed " << ids.size() << " change map(s) into " << target.string() << "\n";
  return kExitOk;
}

int cmd_generate(const Overrides& o, std::ostream& out) {
  const RunConfig config = resolve_config(o);
  if (config.captions_file.empty()) throw InvalidArgument("no captions file configured");
  std::unique_ptr<ChatClient> client;
  if (const auto backend = make_backend(config)) {
    client = std::make_unique<ChatClient>(*backend, config.cache_dir,
                                          config.llm.max_in_flight);
  }
  const DatasetStats stats = build_dataset(to_dataset_config(config), client.get());
  out << "train: " << stats.total(Split::Train) << " records, test: "
      << stats.total(Split::Test) << " records -> " << config.output_dir.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Overrides& o, const std::string& predictions,
                 const std::string& references, bool self, bool csv,
                 const std::optional<std::string>& report_path, std::ostream& out) {
  RunConfig config = o.config ? load_run_config(*o.config) : RunConfig{};
  EvalOptions options;
  options.categories = category_names(config);
  const auto refs = read_jsonl(references);
  EvalReport report;
  if (self) {
    report = evaluate(predictions_from_references(refs), refs, options);
  } else {
    if (predictions.empty()) throw InvalidArgument("--predictions is required without --self");
    report = evaluate(read_predictions(predictions), refs, options);
  }
  emit(report_path, csv ? report.to_csv() : report.to_json().dump(2) + "\n", out);
  return kExitOk;
}

int cmd_kernel_check(std::uint64_t seed, std::optional<double> tolerance,
                     const std::optional<std::string>& report_path, std::ostream& out,
                     std::ostream& err) {
  if (tolerance && !(*tolerance >= 0.0)) {
    throw InvalidArgument("--tolerance must be non-negative");
  }
  kernel::KernelCheckOptions options;
  options.seed = seed;
  options.tolerance = tolerance;
  const kernel::KernelCheckSummary summary = kernel::run_kernel_checks(options);
  emit(report_path, summary.to_json().dump(2) + "\n", out);
  if (summary.all_pass()) return kExitOk;
  for (const auto& check : summary.checks) {
    if (!check.pass) {
      err << "kernel-check: " << check.op << " failed: " << check.measure << " "
          << check.error << " > " << check.tolerance << "\n";
    }
  }
  return kExitFailure;
}

int cmd_convert(const std::string& levir, const std::string& output, std::ostream& out) {
  std::ifstream in(levir, std::ios::binary);
  if (!in) throw IoError("cannot open '" + levir + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(levir + ": " + e.what());
  }
  const LevirConversion converted = convert_levir_cc(j);
  write_text(output, caption_source_to_json(converted.source).dump(2) + "\n");
  out << "converted " << converted.source.size() << " pairs (skipped "
      << converted.skipped << " outside train/test) into " << output << "\n";
  return kExitOk;
}

void add_config(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
}

void add_changemap_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--masks", o.masks, "Directory of <id>.png change maps");
  cmd->add_option("--connectivity", o.connectivity, "Pixel connectivity (4 or 8)")
      ->check(CLI::IsMember({4, 8}));
  cmd->add_option("--min-area", o.min_area, "Drop components smaller than this");
  cmd->add_option("--grid", o.grid, "Grid size for occupancy");
  cmd->add_option("--threshold", o.threshold, "Cell occupancy threshold in [0, 1)");
}

std::optional<log::Level> parse_level(const std::string& text) {
  if (text == "debug") return log::Level::Debug;
  if (text == "info") return log::Level::Info;
  if (text == "warning") return log::Level::Warning;
  if (text == "error") return log::Level::Error;
  if (text == "off") return log::Level::Off;
  return std::nullopt;
}

// Routes library log lines to `err` for the duration of one run.
class LogRedirect {
 public:
  explicit LogRedirect(std::ostream& err) : saved_level_(log::level()) {
    log::set_stream(&err);
  }
  ~LogRedirect() {
    log::set_stream(nullptr);
    log::set_level(saved_level_);
  }
  LogRedirect(const LogRedirect&) = delete;
  LogRedirect& operator=(const LogRedirect&) = delete;

 private:
  log::Level saved_level_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  LogRedirect redirect(err);

  CLI::App app{"Change-analysis dataset builder, evaluator and kernel checker", "rsica"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warning, error or off")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "off"}));

  Overrides o;
  std::vector<std::string> ids;
  int decimals = -1;
  auto* analyze = app.add_subcommand("analyze", "Write per-pair change-map analysis JSON");
  add_config(analyze, o);
  add_changemap_flags(analyze, o);
  analyze->add_option("--out", o.out, "Output directory (files go to <out>/analysis)");
  analyze->add_option("--ids", ids, "Pair ids to analyze (default: every mask)")
      ->delimiter(',');
  analyze->add_option("--decimals", decimals, "Contour coordinate decimals");

  auto* generate = app.add_subcommand("generate", "Build the instruction dataset");
  add_config(generate, o);
  add_changemap_flags(generate, o);
  generate->add_option("--captions", o.captions, "Caption source JSON");
  generate->add_option("--split-file", o.split_file, "Optional {id: split} JSON");
  generate->add_option("--out", o.out, "Output directory");
  generate->add_option("--cache", o.cache, "LLM response cache directory");
  generate->add_option("--seed", o.seed, "Generation seed");
  generate->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_option("--tasks", o.tasks, "Comma-separated task types");
  generate->add_option("--backend", o.backend, "LLM backend: none, mock or remote");

  std::string predictions;
  std::string references;
  bool self = false;
  bool csv = false;
  std::optional<std::string> report_path;
  auto* eval = app.add_subcommand("evaluate", "Score predictions against a dataset file");
  add_config(eval, o);
  eval->add_option("--predictions", predictions, "Prediction JSONL");
  eval->add_option("--references", references, "Reference dataset JSONL")->required();
  eval->add_flag("--self", self, "Score the references against themselves");
  eval->add_flag("--csv", csv, "Emit task,metric,value rows instead of JSON");
  eval->add_option("--out", report_path, "Write the report to this file");

  std::uint64_t kernel_seed = 0;
  std::optional<double> tolerance;
  std::optional<std::string> kernel_report;
  auto* kernel_cmd = app.add_subcommand("kernel-check", "Run the numerical kernel suite");
  kernel_cmd->add_option("--seed", kernel_seed, "Random seed");
  kernel_cmd->add_option("--tolerance", tolerance, "Override every check tolerance");
  kernel_cmd->add_option("--out", kernel_report, "Write the JSON summary to this file");

  std::string levir;
  std::string converted;
  auto* convert = app.add_subcommand("convert-captions",
                                     "Convert LEVIR-CC captions to the caption source format");
  convert->add_option("--levir", levir, "LEVIR-CC caption JSON")->required();
  convert->add_option("--out", converted, "Caption source JSON to write")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  log::set_level(*parse_level(log_level));

  try {
    if (analyze->parsed()) return cmd_analyze(o, ids, decimals, out);
    if (generate->parsed()) return cmd_generate(o, out);
    if (eval->parsed()) {
      return cmd_evaluate(o, predictions, references, self, csv, report_path, out);
    }
    if (kernel_cmd->parsed()) {
      return cmd_kernel_check(kernel_seed, tolerance, kernel_report, out, err);
    }
    if (convert->parsed()) return cmd_convert(levir, converted, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rsica::cli
