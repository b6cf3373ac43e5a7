#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "rsica/json_format.hpp"

namespace rsica {

// One few-shot demonstration for the open-ended QA prompt.
struct SeedExample {
  std::vector<std::string> captions;
  Json counts;    // {"road": 1, ...}
  Json contours;  // {"road": [[[x, y], ...]], ...}
  std::string output;
};

// Versioned instruction strings for every record type. The library embeds
// data/templates.v1.json; a different catalog can be loaded at run time.
struct TemplateCatalog {
  int version = 0;
  std::string image_token;
  std::string stop_token;
  std::string caption;
  std::string binary;
  std::string quant;
  std::string localize;
  std::array<std::string, 3> multiturn;
  std::string open_qa_system;
  std::vector<SeedExample> seeds;

  static const TemplateCatalog& builtin();
  static TemplateCatalog load(const std::filesystem::path& path);
  static TemplateCatalog from_json(const Json& j);
};

}  // namespace rsica
