#include "rsica/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "rsica/error.hpp"

namespace rsica {

namespace {

void reject_unknown(const Json& section, std::string_view name,
                    std::initializer_list<std::string_view> allowed) {
  if (!section.is_object()) throw SchemaError(std::string(name) + " must be an object");
  for (const auto& [key, value] : section.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError("unknown key '" + key + "' in " + std::string(name));
    }
  }
}

template <typename T>
void read_if(const Json& section, const char* key, T& target) {
  if (section.contains(key)) target = section.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::None: return "none";
    case BackendKind::Mock: return "mock";
    case BackendKind::Remote: return "remote";
  }
  return "none";
}

BackendKind parse_backend(const std::string& text) {
  if (text == "none") return BackendKind::None;
  if (text == "mock") return BackendKind::Mock;
  if (text == "remote") return BackendKind::Remote;
  throw SchemaError("llm.backend must be none, mock or remote, got '" + text + "'");
}

}  // namespace

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "config",
                 {"schema_version", "paths", "categories", "changemap", "generation", "llm"});
  if (!j.contains("schema_version")) throw SchemaError("config: missing schema_version");
  if (j.at("schema_version").get<int>() != kConfigSchemaVersion) {
    throw SchemaError("config: unsupported schema_version " +
                      j.at("schema_version").dump());
  }
  RunConfig config;

  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    reject_unknown(p, "paths",
                   {"masks_dir", "captions_file", "split_file", "output_dir", "cache_dir",
                    "image_a_pattern", "image_b_pattern"});
    if (p.contains("masks_dir"))
      config.masks_dir = resolve(base_dir, p.at("masks_dir").get<std::string>());
    if (p.contains("captions_file"))
      config.captions_file = resolve(base_dir, p.at("captions_file").get<std::string>());
    if (p.contains("split_file"))
      config.split_file = resolve(base_dir, p.at("split_file").get<std::string>());
    if (p.contains("output_dir"))
      config.output_dir = resolve(base_dir, p.at("output_dir").get<std::string>());
    if (p.contains("cache_dir"))
      config.cache_dir = resolve(base_dir, p.at("cache_dir").get<std::string>());
    read_if(p, "image_a_pattern", config.image_a_pattern);
    read_if(p, "image_b_pattern", config.image_b_pattern);
  }

  if (j.contains("categories")) {
    const Json& c = j.at("categories");
    if (!c.is_object()) throw SchemaError("categories must be an object");
    config.categories.clear();
    config.categories.emplace(0, "none");
    for (const auto& [key, value] : c.items()) {
      int id = -1;
      try {
        std::size_t used = 0;
        id = std::stoi(key, &used);
        if (used != key.size()) id = -1;
      } catch (const std::exception&) {
        id = -1;
      }
      if (id < 0 || id > 255) throw SchemaError("category id '" + key + "' is not 0..255");
      config.categories[static_cast<CategoryId>(id)] = value.get<std::string>();
    }
  }

  if (j.contains("changemap")) {
    const Json& m = j.at("changemap");
    reject_unknown(m, "changemap",
                   {"connectivity", "min_area", "grid", "threshold", "contour_decimals"});
    if (m.contains("connectivity")) {
      const int c = m.at("connectivity").get<int>();
      if (c != 4 && c != 8) throw SchemaError("changemap.connectivity must be 4 or 8");
      config.analysis.label.connectivity = c == 4 ? Connectivity::Four : Connectivity::Eight;
    }
    read_if(m, "min_area", config.analysis.label.min_area);
    read_if(m, "grid", config.analysis.grid.grid);
    read_if(m, "threshold", config.analysis.grid.threshold);
    read_if(m, "contour_decimals", config.analysis.contour_decimals);
  }

  if (j.contains("generation")) {
    const Json& g = j.at("generation");
    reject_unknown(g, "generation", {"seed", "tasks", "threads"});
    if (g.contains("seed")) {
      const Json& s = g.at("seed");
      if (!s.is_number_unsigned()) throw SchemaError("generation.seed must be an unsigned integer");
      config.seed = s.get<std::uint64_t>();
    }
    if (g.contains("tasks")) {
      config.tasks.clear();
      for (const Json& t : g.at("tasks")) {
        const auto task = parse_task_type(t.get<std::string>());
        if (!task) throw SchemaError("unknown task type " + t.dump());
        config.tasks.push_back(*task);
      }
    }
    read_if(g, "threads", config.threads);
  }

  if (j.contains("llm")) {
    const Json& l = j.at("llm");
    reject_unknown(l, "llm",
                   {"backend", "endpoint", "model", "api_key_env", "temperature",
                    "max_tokens", "max_retries", "backoff_ms", "max_in_flight"});
    if (l.contains("backend")) config.llm.backend = parse_backend(l.at("backend").get<std::string>());
    read_if(l, "endpoint", config.llm.endpoint);
    read_if(l, "model", config.llm.model);
    read_if(l, "api_key_env", config.llm.api_key_env);
    read_if(l, "temperature", config.llm.temperature);
    read_if(l, "max_tokens", config.llm.max_tokens);
    read_if(l, "max_retries", config.llm.max_retries);
    read_if(l, "backoff_ms", config.llm.backoff_ms);
    read_if(l, "max_in_flight", config.llm.max_in_flight);
  }

  validate(config);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  try {
    return run_config_from_json(j, path.parent_path());
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

Json run_config_to_json(const RunConfig& config) {
  Json paths = {{"masks_dir", config.masks_dir.string()},
                {"captions_file", config.captions_file.string()}};
  if (config.split_file) paths["split_file"] = config.split_file->string();
  paths["output_dir"] = config.output_dir.string();
  if (config.cache_dir) paths["cache_dir"] = config.cache_dir->string();
  paths["image_a_pattern"] = config.image_a_pattern;
  paths["image_b_pattern"] = config.image_b_pattern;

  Json categories = Json::object();
  for (const auto& [id, name] : config.categories) {
    if (id != 0) categories[std::to_string(id)] = name;
  }
  Json tasks = Json::array();
  for (TaskType t : config.tasks) tasks.push_back(std::string(rsica::to_string(t)));

  return Json{
      {"schema_version", kConfigSchemaVersion},
      {"paths", paths},
      {"categories", categories},
      {"changemap",
       {{"connectivity", static_cast<int>(config.analysis.label.connectivity)},
        {"min_area", config.analysis.label.min_area},
        {"grid", config.analysis.grid.grid},
        {"threshold", config.analysis.grid.threshold},
        {"contour_decimals", config.analysis.contour_decimals}}},
      {"generation", {{"seed", config.seed}, {"tasks", tasks}, {"threads", config.threads}}},
      {"llm",
       {{"backend", std::string(to_string(config.llm.backend))},
        {"endpoint", config.llm.endpoint},
        {"model", config.llm.model},
        {"api_key_env", config.llm.api_key_env},
        {"temperature", config.llm.temperature},
        {"max_tokens", config.llm.max_tokens},
        {"max_retries", config.llm.max_retries},
        {"backoff_ms", config.llm.backoff_ms},
        {"max_in_flight", config.llm.max_in_flight}}}};
}

void validate(const RunConfig& config) {
  const auto& grid = config.analysis.grid;
  if (!(grid.threshold >= 0.0 && grid.threshold < 1.0)) {
    throw InvalidArgument("changemap.threshold must be in [0, 1)");
  }
  if (grid.grid < 1) throw InvalidArgument("changemap.grid must be positive");
  if (config.analysis.contour_decimals < 0 || config.analysis.contour_decimals > 15) {
    throw InvalidArgument("changemap.contour_decimals must be in [0, 15]");
  }
  if (config.threads < 1) throw InvalidArgument("generation.threads must be at least 1");
  std::set<std::string> names;
  for (const auto& [id, name] : config.categories) {
    if (name.empty()) throw InvalidArgument("category names must not be empty");
    if (!names.insert(name).second) {
      throw InvalidArgument("duplicate category name '" + name + "'");
    }
  }
  if (!config.categories.contains(0)) {
    throw InvalidArgument("category 0 (no change) is required");
  }
  const auto& llm = config.llm;
  if (llm.temperature < 0.0) throw InvalidArgument("llm.temperature must be >= 0");
  if (llm.max_tokens < 1) throw InvalidArgument("llm.max_tokens must be positive");
  if (llm.max_retries < 0) throw InvalidArgument("llm.max_retries must be >= 0");
  if (llm.backoff_ms < 0) throw InvalidArgument("llm.backoff_ms must be >= 0");
  if (llm.max_in_flight < 1) throw InvalidArgument("llm.max_in_flight must be positive");
}

DatasetConfig to_dataset_config(const RunConfig& config) {
  DatasetConfig d;
  d.masks_dir = config.masks_dir;
  d.captions_file = config.captions_file;
  d.split_file = config.split_file;
  d.output_dir = config.output_dir;
  d.image_a_pattern = config.image_a_pattern;
  d.image_b_pattern = config.image_b_pattern;
  d.categories = config.categories;
  d.analysis = config.analysis;
  d.tasks = config.tasks;
  d.threads = config.threads;
  d.seed = config.seed;
  d.llm.model = config.llm.model;
  d.llm.temperature = config.llm.temperature;
  d.llm.max_tokens = config.llm.max_tokens;
  return d;
}

std::optional<Backend> make_backend(const RunConfig& config) {
  switch (config.llm.backend) {
    case BackendKind::None:
      return std::nullopt;
    case BackendKind::Mock:
      return MockBackend{config.seed};
    case BackendKind::Remote: {
      const char* key = std::getenv(config.llm.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw InvalidArgument("environment variable " + config.llm.api_key_env +
                              " is not set for the remote LLM backend");
      }
      RemoteBackend remote;
      remote.endpoint = config.llm.endpoint;
      remote.api_key = key;
      remote.max_retries = config.llm.max_retries;
      remote.initial_backoff = std::chrono::milliseconds(config.llm.backoff_ms);
      return remote;
    }
  }
  return std::nullopt;
}

}  // namespace rsica
