#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsica {

using CategoryId = std::uint8_t;

// Category id -> name. Id 0 is reserved for "no change".
using CategoryDict = std::map<CategoryId, std::string>;

// {0: none, 1: road, 2: building}
CategoryDict default_categories();

// Per-pixel category labels of a co-registered image pair. Immutable.
class ChangeMap {
 public:
  // Throws InvalidArgument when dimensions, label count or dictionary are
  // inconsistent; the message names the first offending value and pixel.
  ChangeMap(int width, int height, std::vector<CategoryId> labels,
            CategoryDict categories);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  CategoryId at(int x, int y) const noexcept {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const CategoryId> labels() const noexcept { return labels_; }
  const CategoryDict& categories() const noexcept { return categories_; }

  // Throws InvalidArgument for ids missing from the dictionary.
  const std::string& category_name(CategoryId id) const;
  std::optional<CategoryId> find_category(std::string_view name) const;

  // Non-zero category ids in ascending order.
  std::vector<CategoryId> change_categories() const;

 private:
  int width_;
  int height_;
  std::vector<CategoryId> labels_;
  CategoryDict categories_;
};

// Reads an 8-bit single-channel PNG whose pixel values are category ids.
ChangeMap load_change_map(const std::filesystem::path& path,
                          const CategoryDict& categories);

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Inclusive pixel bounds.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Connectivity { Four = 4, Eight = 8 };

// One connected changed object. `pixels` is in row-major order.
struct Region {
  CategoryId category = 0;
  std::size_t area = 0;
  BoundingBox bbox;
  std::vector<Pixel> pixels;
};

struct LabelOptions {
  Connectivity connectivity = Connectivity::Eight;
  std::size_t min_area = 0;
};

// Maximal connected sets of `category` pixels with area >= min_area, sorted
// by the (y_min, x_min) corner of their bounding boxes.
std::vector<Region> label_components(const ChangeMap& map, CategoryId category,
                                     const LabelOptions& options = {});

// Exterior boundary in [0,1]^2 coordinates; closing point not repeated.
struct NormalizedContour {
  CategoryId category = 0;
  std::vector<std::array<double, 2>> points;
};

// Border-following walk around the region's outer boundary (holes ignored),
// starting at its first pixel in raster order. Coordinates are divided by
// (dim - 1) and rounded to `decimals` places.
NormalizedContour contours_of(const Region& region, int map_width,
                              int map_height, int decimals = 2);

// Raw pixel-coordinate walk behind contours_of.
std::vector<Pixel> trace_exterior(const Region& region);

// Object counts keyed by category name, kept in category-id order.
class CategoryCounts {
 public:
  CategoryCounts() = default;
  explicit CategoryCounts(std::vector<std::pair<std::string, int>> entries);

  void set(const std::string& name, int count);
  std::optional<int> get(std::string_view name) const;
  bool contains(std::string_view name) const { return get(name).has_value(); }
  int total() const;

  const std::vector<std::pair<std::string, int>>& entries() const noexcept {
    return entries_;
  }
  friend bool operator==(const CategoryCounts&, const CategoryCounts&) = default;

 private:
  std::vector<std::pair<std::string, int>> entries_;
};

CategoryCounts count_by_category(const ChangeMap& map,
                                 const LabelOptions& options = {});

// Cells of the 3x3 localization grid, in reading order.
enum class Cell : std::uint8_t { TL, TC, TR, CL, CC, CR, BL, BC, BR };

inline constexpr std::array<Cell, 9> kAllCells = {
    Cell::TL, Cell::TC, Cell::TR, Cell::CL, Cell::CC,
    Cell::CR, Cell::BL, Cell::BC, Cell::BR};

std::string_view cell_label(Cell cell);
std::optional<Cell> parse_cell_label(std::string_view label);

class CellSet {
 public:
  CellSet() = default;
  CellSet(std::initializer_list<Cell> cells);

  void insert(Cell cell) { bits_.set(static_cast<std::size_t>(cell)); }
  bool contains(Cell cell) const {
    return bits_.test(static_cast<std::size_t>(cell));
  }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }

  // Members in reading order.
  std::vector<Cell> cells() const;

  CellSet operator&(const CellSet& other) const {
    return CellSet(bits_ & other.bits_);
  }
  CellSet operator|(const CellSet& other) const {
    return CellSet(bits_ | other.bits_);
  }
  friend bool operator==(const CellSet&, const CellSet&) = default;

 private:
  explicit CellSet(std::bitset<9> bits) : bits_(bits) {}
  std::bitset<9> bits_;
};

struct GridOptions {
  int grid = 3;
  double threshold = 0.05;
};

// Block occupancy for any grid size: entry r*grid+c is true iff the share of
// `category` pixels in block (r, c) strictly exceeds the threshold. Block
// row r spans rows floor(r*H/grid) .. floor((r+1)*H/grid)-1; same for columns.
std::vector<bool> grid_occupancy(const ChangeMap& map, CategoryId category,
                                 const GridOptions& options = {});

// Named 3x3 variant of grid_occupancy. Requires options.grid == 3.
CellSet grid_cells(const ChangeMap& map, CategoryId category,
                   const GridOptions& options = {});

bool has_change(const ChangeMap& map, const LabelOptions& options = {});

struct AnalysisOptions {
  LabelOptions label;
  GridOptions grid;
  int contour_decimals = 2;
};

// Everything the rule-based generators and the `analyze` command need
// from one change map. Per-category vectors follow category-id order.
struct ChangeAnalysis {
  std::string id;
  CategoryCounts counts;
  std::vector<std::pair<std::string, std::vector<NormalizedContour>>> contours;
  std::vector<std::pair<std::string, CellSet>> cells;
  bool changed = false;
};

ChangeAnalysis analyze_change_map(const ChangeMap& map, std::string id,
                                  const AnalysisOptions& options = {});

}  // namespace rsica
