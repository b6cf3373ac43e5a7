#include "rsica/json_format.hpp"

namespace rsica {

namespace {

void dump_into(const Json& value, std::string& out) {
  if (value.is_object()) {
    out += '{';
    bool first = true;
    for (const auto& [key, item] : value.items()) {
      if (!first) out += ", ";
      first = false;
      out += Json(key).dump();
      out += ": ";
      dump_into(item, out);
    }
    out += '}';
  } else if (value.is_array()) {
    out += '[';
    bool first = true;
    for (const auto& item : value) {
      if (!first) out += ", ";
      first = false;
      dump_into(item, out);
    }
    out += ']';
  } else {
    out += value.dump(-1, ' ', false, Json::error_handler_t::replace);
  }
}

}  // namespace

std::string dump_inline(const Json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

Json counts_to_json(const CategoryCounts& counts) {
  Json j = Json::object();
  for (const auto& [name, count] : counts.entries()) j[name] = count;
  return j;
}

Json contours_to_json(
    const std::vector<std::pair<std::string, std::vector<NormalizedContour>>>&
        contours) {
  Json j = Json::object();
  for (const auto& [name, list] : contours) {
    Json polygons = Json::array();
    for (const NormalizedContour& contour : list) {
      Json points = Json::array();
      for (const auto& [x, y] : contour.points) points.push_back(Json::array({x, y}));
      polygons.push_back(std::move(points));
    }
    j[name] = std::move(polygons);
  }
  return j;
}

Json cells_to_json(const std::vector<std::pair<std::string, CellSet>>& cells) {
  Json j = Json::object();
  for (const auto& [name, set] : cells) {
    Json labels = Json::array();
    for (Cell c : set.cells()) labels.push_back(std::string(cell_label(c)));
    j[name] = std::move(labels);
  }
  return j;
}

Json analysis_to_json(const ChangeAnalysis& analysis) {
  Json j = Json::object();
  j["id"] = analysis.id;
  j["counts"] = counts_to_json(analysis.counts);
  j["contours"] = contours_to_json(analysis.contours);
  j["cells"] = cells_to_json(analysis.cells);
  j["changed"] = analysis.changed;
  return j;
}

}  // namespace rsica
