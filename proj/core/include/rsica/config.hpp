#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsica/changemap.hpp"
#include "rsica/dataset.hpp"
#include "rsica/instructgen.hpp"
#include "rsica/json_format.hpp"
#include "rsica/llmclient.hpp"

namespace rsica {

inline constexpr int kConfigSchemaVersion = 1;

enum class BackendKind { None, Mock, Remote };

struct LlmConfig {
  BackendKind backend = BackendKind::None;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_tokens = 1024;
  int max_retries = 3;
  int backoff_ms = 500;
  int max_in_flight = 4;
};

// Settings shared by every subcommand. Relative paths in a config file are
// resolved against the directory holding that file.
struct RunConfig {
  std::filesystem::path masks_dir;
  std::filesystem::path captions_file;
  std::optional<std::filesystem::path> split_file;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
  std::string image_a_pattern = "images/{split}/A/{id}.png";
  std::string image_b_pattern = "images/{split}/B/{id}.png";

  CategoryDict categories = default_categories();
  AnalysisOptions analysis;

  std::uint64_t seed = 0;
  std::vector<TaskType> tasks = {kAllTaskTypes.begin(), kAllTaskTypes.end()};
  unsigned threads = 1;
  LlmConfig llm;
};

// {"schema_version": 1, "paths": {...}, "categories": {"1": "road", ...},
//  "changemap": {...}, "generation": {...}, "llm": {...}}. Every section and
// key is optional; unknown keys are rejected.
RunConfig run_config_from_json(const Json& j,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
Json run_config_to_json(const RunConfig& config);

// Throws InvalidArgument on out-of-range values.
void validate(const RunConfig& config);

DatasetConfig to_dataset_config(const RunConfig& config);

// Reads the API key from the environment for the remote backend.
std::optional<Backend> make_backend(const RunConfig& config);

}  // namespace rsica
