#include "fixtures.hpp"

#include <algorithm>
#include <fstream>

#include "rsica/json_format.hpp"
#include "rsica/png_io.hpp"
#include "temp_dir.hpp"

namespace rsica::testing {

namespace {

void fill_rect(oracle::Mask& m, int x0, int y0, int x1, int y1, std::uint8_t value) {
  for (int y = std::max(0, y0); y <= std::min(m.height - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(m.width - 1, x1); ++x) {
      m.values[y * m.width + x] = value;
    }
  }
}

}  // namespace

oracle::Mask random_mask(int width, int height, std::mt19937_64& rng) {
  oracle::Mask m{width, height, std::vector<std::uint8_t>(width * height, 0)};
  std::uniform_int_distribution<int> rects(0, 12);
  std::uniform_int_distribution<int> cat(1, 2);
  std::uniform_int_distribution<int> px(0, width - 1);
  std::uniform_int_distribution<int> py(0, height - 1);
  std::uniform_int_distribution<int> extent(0, std::max(1, std::min(width, height) / 6));
  const int n = rects(rng);
  for (int i = 0; i < n; ++i) {
    const int x = px(rng);
    const int y = py(rng);
    fill_rect(m, x, y, x + extent(rng), y + extent(rng), static_cast<std::uint8_t>(cat(rng)));
  }
  std::uniform_int_distribution<int> speckle(0, width * height / 40);
  const int dots = speckle(rng);
  for (int i = 0; i < dots; ++i) {
    m.values[py(rng) * width + px(rng)] = static_cast<std::uint8_t>(cat(rng));
  }
  return m;
}

ChangeMap to_change_map(const oracle::Mask& mask) {
  return ChangeMap(mask.width, mask.height, mask.values, default_categories());
}

oracle::Mask seed_pair_mask() {
  oracle::Mask m{256, 256, std::vector<std::uint8_t>(256 * 256, 0)};
  // One road along the right edge, ten separated houses.
  fill_rect(m, 244, 40, 255, 230, 1);
  for (int i = 0; i < 10; ++i) {
    const int x = 20 + (i % 5) * 40;
    const int y = 30 + (i / 5) * 120;
    fill_rect(m, x, y, x + 14, y + 12, 2);
  }
  return m;
}

SyntheticSource write_synthetic_source(const std::filesystem::path& root, int pairs,
                                       std::uint64_t seed, int size) {
  SyntheticSource s;
  s.masks_dir = root / "masks";
  s.captions_file = root / "captions.json";
  s.config_file = root / "config.json";
  std::filesystem::create_directories(s.masks_dir);
  std::mt19937_64 rng(seed);
  Json captions = Json::object();
  for (int i = 0; i < pairs; ++i) {
    const std::string id = "pair_" + std::to_string(1000 + i);
    s.ids.push_back(id);
    oracle::Mask m = random_mask(size, size, rng);
    if (i % 3 == 2) std::fill(m.values.begin(), m.values.end(), 0);
    write_gray_png(s.masks_dir / (id + ".png"), GrayImage{m.width, m.height, m.values});
    Json list = Json::array();
    for (int c = 0; c < 5; ++c) {
      list.push_back(i % 3 == 2 ? "the scene is unchanged"
                                : "caption " + std::to_string(c) + " of " + id +
                                      " shows new buildings near a road");
    }
    captions[id] = {{"split", i % 4 == 3 ? "test" : "train"}, {"captions", list}};
  }
  write_file(s.captions_file, captions.dump(2));
  const Json config = {
      {"schema_version", 1},
      {"paths",
       {{"masks_dir", "masks"}, {"captions_file", "captions.json"}, {"output_dir", "out"}}},
      {"generation", {{"seed", seed}}}};
  write_file(s.config_file, config.dump(2));
  return s;
}

}  // namespace rsica::testing
