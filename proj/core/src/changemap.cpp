#include "rsica/changemap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <numeric>
#include <tuple>

#include "rsica/error.hpp"
#include "rsica/png_io.hpp"

namespace rsica {

namespace {

std::string describe_pixel(std::size_t offset, int width) {
  const auto x = offset % static_cast<std::size_t>(width);
  const auto y = offset / static_cast<std::size_t>(width);
  return "(x=" + std::to_string(x) + ", y=" + std::to_string(y) + ")";
}

void require_known(const ChangeMap& map, CategoryId category) {
  if (!map.categories().contains(category)) {
    throw InvalidArgument("unknown category id " + std::to_string(category));
  }
}

}  // namespace

CategoryDict default_categories() {
  return {{0, "none"}, {1, "road"}, {2, "building"}};
}

ChangeMap::ChangeMap(int width, int height, std::vector<CategoryId> labels,
                     CategoryDict categories)
    : width_(width),
      height_(height),
      labels_(std::move(labels)),
      categories_(std::move(categories)) {
  if (width_ <= 0 || height_ <= 0) {
    throw InvalidArgument("change map dimensions must be positive, got " +
                          std::to_string(width_) + "x" +
                          std::to_string(height_));
  }
  if (labels_.size() != static_cast<std::size_t>(width_) * height_) {
    throw InvalidArgument("change map has " + std::to_string(labels_.size()) +
                          " labels, expected " +
                          std::to_string(static_cast<std::size_t>(width_) * height_));
  }
  if (!categories_.contains(0)) {
    throw InvalidArgument("category dictionary must define id 0 (no change)");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!categories_.contains(labels_[i])) {
      throw InvalidArgument("pixel value " + std::to_string(labels_[i]) +
                            " at " + describe_pixel(i, width_) +
                            " is not in the category dictionary");
    }
  }
}

const std::string& ChangeMap::category_name(CategoryId id) const {
  auto it = categories_.find(id);
  if (it == categories_.end()) {
    throw InvalidArgument("unknown category id " + std::to_string(id));
  }
  return it->second;
}

std::optional<CategoryId> ChangeMap::find_category(std::string_view name) const {
  for (const auto& [id, n] : categories_) {
    if (n == name) return id;
  }
  return std::nullopt;
}

std::vector<CategoryId> ChangeMap::change_categories() const {
  std::vector<CategoryId> ids;
  for (const auto& [id, name] : categories_) {
    if (id != 0) ids.push_back(id);
  }
  return ids;
}

ChangeMap load_change_map(const std::filesystem::path& path,
                          const CategoryDict& categories) {
  GrayImage image = read_gray_png(path);
  try {
    return ChangeMap(image.width, image.height, std::move(image.pixels),
                     categories);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::vector<Region> label_components(const ChangeMap& map, CategoryId category,
                                     const LabelOptions& options) {
  if (category == 0) {
    throw InvalidArgument("label_components: category 0 means no change");
  }
  require_known(map, category);

  const int width = map.width();
  const int height = map.height();
  const bool diagonal = options.connectivity == Connectivity::Eight;

  std::vector<bool> visited(static_cast<std::size_t>(width) * height, false);
  std::vector<Region> regions;
  std::deque<Pixel> frontier;

  for (int y0 = 0; y0 < height; ++y0) {
    for (int x0 = 0; x0 < width; ++x0) {
      const auto start = static_cast<std::size_t>(y0) * width + x0;
      if (visited[start] || map.at(x0, y0) != category) continue;

      Region region;
      region.category = category;
      region.bbox = {x0, y0, x0, y0};
      visited[start] = true;
      frontier.push_back({x0, y0});
      while (!frontier.empty()) {
        const Pixel p = frontier.front();
        frontier.pop_front();
        region.pixels.push_back(p);
        region.bbox.x_min = std::min(region.bbox.x_min, p.x);
        region.bbox.x_max = std::max(region.bbox.x_max, p.x);
        region.bbox.y_max = std::max(region.bbox.y_max, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!diagonal && dx != 0 && dy != 0) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
            const auto offset = static_cast<std::size_t>(ny) * width + nx;
            if (visited[offset] || map.at(nx, ny) != category) continue;
            visited[offset] = true;
            frontier.push_back({nx, ny});
          }
        }
      }
      region.area = region.pixels.size();
      if (region.area < options.min_area) continue;
      std::sort(region.pixels.begin(), region.pixels.end(),
                [](const Pixel& a, const Pixel& b) {
                  return std::tie(a.y, a.x) < std::tie(b.y, b.x);
                });
      regions.push_back(std::move(region));
    }
  }

  // Discovery order already sorts by y_min; x_min needs the explicit pass.
  std::stable_sort(regions.begin(), regions.end(),
                   [](const Region& a, const Region& b) {
                     return std::tie(a.bbox.y_min, a.bbox.x_min) <
                            std::tie(b.bbox.y_min, b.bbox.x_min);
                   });
  return regions;
}

CategoryCounts::CategoryCounts(std::vector<std::pair<std::string, int>> entries)
    : entries_(std::move(entries)) {}

void CategoryCounts::set(const std::string& name, int count) {
  for (auto& [n, c] : entries_) {
    if (n == name) {
      c = count;
      return;
    }
  }
  entries_.emplace_back(name, count);
}

std::optional<int> CategoryCounts::get(std::string_view name) const {
  for (const auto& [n, c] : entries_) {
    if (n == name) return c;
  }
  return std::nullopt;
}

int CategoryCounts::total() const {
  return std::accumulate(entries_.begin(), entries_.end(), 0,
                         [](int sum, const auto& e) { return sum + e.second; });
}

CategoryCounts count_by_category(const ChangeMap& map,
                                 const LabelOptions& options) {
  CategoryCounts counts;
  for (CategoryId id : map.change_categories()) {
    counts.set(map.category_name(id),
               static_cast<int>(label_components(map, id, options).size()));
  }
  return counts;
}

std::string_view cell_label(Cell cell) {
  static constexpr std::array<std::string_view, 9> kLabels = {
      "TL", "TC", "TR", "CL", "CC", "CR", "BL", "BC", "BR"};
  return kLabels[static_cast<std::size_t>(cell)];
}

std::optional<Cell> parse_cell_label(std::string_view label) {
  for (Cell cell : kAllCells) {
    const auto name = cell_label(cell);
    if (label.size() == 2 &&
        std::toupper(static_cast<unsigned char>(label[0])) == name[0] &&
        std::toupper(static_cast<unsigned char>(label[1])) == name[1]) {
      return cell;
    }
  }
  return std::nullopt;
}

CellSet::CellSet(std::initializer_list<Cell> cells) {
  for (Cell c : cells) insert(c);
}

std::vector<Cell> CellSet::cells() const {
  std::vector<Cell> out;
  for (Cell c : kAllCells) {
    if (contains(c)) out.push_back(c);
  }
  return out;
}

std::vector<bool> grid_occupancy(const ChangeMap& map, CategoryId category,
                                 const GridOptions& options) {
  require_known(map, category);
  if (options.grid < 1) {
    throw InvalidArgument("grid must be >= 1, got " +
                          std::to_string(options.grid));
  }
  if (!(options.threshold >= 0.0 && options.threshold < 1.0)) {
    throw InvalidArgument("threshold must lie in [0, 1)");
  }

  const int grid = options.grid;
  const auto block_of = [grid](int extent) {
    // Block index of each coordinate under floor boundaries.
    std::vector<int> index(extent);
    for (int b = 0; b < grid; ++b) {
      const auto lo = static_cast<long long>(b) * extent / grid;
      const auto hi = static_cast<long long>(b + 1) * extent / grid;
      for (auto i = lo; i < hi; ++i) index[i] = b;
    }
    return index;
  };
  const std::vector<int> row_block = block_of(map.height());
  const std::vector<int> col_block = block_of(map.width());

  const auto cells = static_cast<std::size_t>(grid) * grid;
  std::vector<std::size_t> hits(cells, 0);
  std::vector<std::size_t> totals(cells, 0);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const auto cell = static_cast<std::size_t>(row_block[y]) * grid + col_block[x];
      ++totals[cell];
      if (map.at(x, y) == category) ++hits[cell];
    }
  }

  std::vector<bool> occupied(cells, false);
  for (std::size_t c = 0; c < cells; ++c) {
    if (totals[c] == 0) continue;
    const double fraction =
        static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
    occupied[c] = fraction > options.threshold;
  }
  return occupied;
}

CellSet grid_cells(const ChangeMap& map, CategoryId category,
                   const GridOptions& options) {
  if (options.grid != 3) {
    throw InvalidArgument("named grid cells exist only for grid=3, got " +
                          std::to_string(options.grid));
  }
  const std::vector<bool> occupied = grid_occupancy(map, category, options);
  CellSet cells;
  for (std::size_t i = 0; i < kAllCells.size(); ++i) {
    if (occupied[i]) cells.insert(kAllCells[i]);
  }
  return cells;
}

bool has_change(const ChangeMap& map, const LabelOptions& options) {
  for (CategoryId id : map.change_categories()) {
    if (!label_components(map, id, options).empty()) return true;
  }
  return false;
}

ChangeAnalysis analyze_change_map(const ChangeMap& map, std::string id,
                                  const AnalysisOptions& options) {
  ChangeAnalysis analysis;
  analysis.id = std::move(id);
  for (CategoryId category : map.change_categories()) {
    const std::string& name = map.category_name(category);
    const std::vector<Region> regions =
        label_components(map, category, options.label);
    analysis.counts.set(name, static_cast<int>(regions.size()));

    std::vector<NormalizedContour> contours;
    contours.reserve(regions.size());
    for (const Region& region : regions) {
      contours.push_back(contours_of(region, map.width(), map.height(),
                                     options.contour_decimals));
    }
    analysis.contours.emplace_back(name, std::move(contours));
    analysis.cells.emplace_back(name, grid_cells(map, category, options.grid));
    analysis.changed = analysis.changed || !regions.empty();
  }
  return analysis;
}

}  // namespace rsica
