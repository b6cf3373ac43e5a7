#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsica/changemap.hpp"

namespace rsica {

// Insertion-ordered JSON; key order is part of every output format.
using Json = nlohmann::ordered_json;

// Single-line rendering with ", " and ": " separators,
// e.g. {"road": 1, "building": 10}.
std::string dump_inline(const Json& value);

Json counts_to_json(const CategoryCounts& counts);

// {"road": [[[x, y], ...], ...], "building": [...]}
Json contours_to_json(
    const std::vector<std::pair<std::string, std::vector<NormalizedContour>>>&
        contours);

Json cells_to_json(const std::vector<std::pair<std::string, CellSet>>& cells);

// {"id", "counts", "contours", "cells", "changed"}
Json analysis_to_json(const ChangeAnalysis& analysis);

}  // namespace rsica
