#include <array>
#include <cmath>
#include <tuple>

#include "rsica/changemap.hpp"
#include "rsica/error.hpp"

namespace rsica {

namespace {

// Neighbour offsets in counter-clockwise order (image y axis points down).
constexpr std::array<Pixel, 8> kRing = {{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};
constexpr int kWest = 4;

int direction_between(const Pixel& from, const Pixel& to) {
  for (int d = 0; d < 8; ++d) {
    if (from.x + kRing[d].x == to.x && from.y + kRing[d].y == to.y) return d;
  }
  return -1;
}

class RegionMask {
 public:
  explicit RegionMask(const Region& region)
      : box_(region.bbox),
        stride_(box_.x_max - box_.x_min + 1),
        bits_(static_cast<std::size_t>(stride_) * (box_.y_max - box_.y_min + 1),
              false) {
    for (const Pixel& p : region.pixels) bits_[offset(p)] = true;
  }

  bool contains(const Pixel& p) const {
    if (p.x < box_.x_min || p.x > box_.x_max || p.y < box_.y_min ||
        p.y > box_.y_max) {
      return false;
    }
    return bits_[offset(p)];
  }

 private:
  std::size_t offset(const Pixel& p) const {
    return static_cast<std::size_t>(p.y - box_.y_min) * stride_ +
           (p.x - box_.x_min);
  }

  BoundingBox box_;
  int stride_;
  std::vector<bool> bits_;
};

Pixel step(const Pixel& p, int d) { return {p.x + kRing[d].x, p.y + kRing[d].y}; }

double normalize(int coord, int extent, double scale) {
  if (extent <= 1) return 0.0;
  const double v = static_cast<double>(coord) / static_cast<double>(extent - 1);
  return std::round(v * scale) / scale;
}

}  // namespace

std::vector<Pixel> trace_exterior(const Region& region) {
  if (region.pixels.empty()) {
    throw InvalidArgument("trace_exterior: empty region");
  }
  const RegionMask mask(region);

  // First pixel in raster order; its west, north-west, north and north-east
  // neighbours are outside the region.
  Pixel start = region.pixels.front();
  for (const Pixel& p : region.pixels) {
    if (std::tie(p.y, p.x) < std::tie(start.y, start.x)) start = p;
  }

  std::vector<Pixel> walk;
  int first_dir = -1;
  for (int k = 0; k < 8; ++k) {
    const int d = (kWest - k + 8) % 8;  // clockwise from west
    if (mask.contains(step(start, d))) {
      first_dir = d;
      break;
    }
  }
  if (first_dir < 0) {
    walk.push_back(start);
    return walk;
  }

  const Pixel second = step(start, first_dir);
  Pixel previous = second;
  Pixel current = start;
  while (true) {
    walk.push_back(current);
    const int back = direction_between(current, previous);
    Pixel next = current;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      if (mask.contains(step(current, d))) {
        next = step(current, d);
        break;
      }
    }
    if (next == start && current == second) break;
    previous = current;
    current = next;
  }
  return walk;
}

NormalizedContour contours_of(const Region& region, int map_width,
                              int map_height, int decimals) {
  if (region.pixels.empty()) {
    throw InvalidArgument("contours_of: empty region");
  }
  if (map_width <= 0 || map_height <= 0 || region.bbox.x_min < 0 ||
      region.bbox.y_min < 0 || region.bbox.x_max >= map_width ||
      region.bbox.y_max >= map_height) {
    throw InvalidArgument("contours_of: region lies outside the " +
                          std::to_string(map_width) + "x" +
                          std::to_string(map_height) + " map");
  }
  if (decimals < 0 || decimals > 15) {
    throw InvalidArgument("contours_of: decimals must lie in [0, 15]");
  }

  const double scale = std::pow(10.0, decimals);
  NormalizedContour contour;
  contour.category = region.category;
  for (const Pixel& p : trace_exterior(region)) {
    contour.points.push_back({normalize(p.x, map_width, scale),
                              normalize(p.y, map_height, scale)});
  }
  return contour;
}

}  // namespace rsica
