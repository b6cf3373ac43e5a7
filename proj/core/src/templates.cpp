#include "rsica/templates.hpp"

#include <fstream>
#include <string_view>

#include "rsica/error.hpp"

namespace rsica {

namespace detail {
extern const std::string_view kBuiltinTemplates;
}

namespace {

std::string required_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
    throw SchemaError(std::string("template catalog: missing string '") + key + "'");
  }
  return j[key].get<std::string>();
}

}  // namespace

TemplateCatalog TemplateCatalog::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer()) {
    throw SchemaError("template catalog: missing integer 'version'");
  }
  TemplateCatalog c;
  c.version = j["version"].get<int>();
  if (c.version != 1) {
    throw SchemaError("template catalog: unsupported version " +
                      std::to_string(c.version));
  }
  c.image_token = required_string(j, "image_token");
  c.stop_token = required_string(j, "stop_token");
  c.caption = required_string(j, "caption");
  c.binary = required_string(j, "binary");
  c.quant = required_string(j, "quant");
  c.localize = required_string(j, "localize");

  if (!j.contains("multiturn") || !j["multiturn"].is_array() ||
      j["multiturn"].size() != 3) {
    throw SchemaError("template catalog: 'multiturn' must hold 3 questions");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    c.multiturn[i] = j["multiturn"][i].get<std::string>();
  }

  if (!j.contains("open_qa") || !j["open_qa"].is_object()) {
    throw SchemaError("template catalog: missing 'open_qa' section");
  }
  const Json& qa = j["open_qa"];
  c.open_qa_system = required_string(qa, "system");
  if (!qa.contains("seeds") || !qa["seeds"].is_array() || qa["seeds"].empty()) {
    throw SchemaError("template catalog: 'open_qa.seeds' must be a nonempty array");
  }
  for (const Json& s : qa["seeds"]) {
    SeedExample seed;
    seed.captions = s.at("captions").get<std::vector<std::string>>();
    seed.counts = s.at("counts");
    seed.contours = s.at("contours");
    seed.output = required_string(s, "output");
    c.seeds.push_back(std::move(seed));
  }
  return c;
}

const TemplateCatalog& TemplateCatalog::builtin() {
  static const TemplateCatalog catalog =
      from_json(Json::parse(detail::kBuiltinTemplates));
  return catalog;
}

TemplateCatalog TemplateCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open template catalog '" + path.string() + "'");
  try {
    return from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace rsica
