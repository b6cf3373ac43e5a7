#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rsica/changemap.hpp"

namespace rsica::testing {

// Random rectangles and speckle over categories 1 and 2.
oracle::Mask random_mask(int width, int height, std::mt19937_64& rng);

ChangeMap to_change_map(const oracle::Mask& mask);

// 256 x 256 map with one road component and ten building components.
oracle::Mask seed_pair_mask();

// Writes masks/<id>.png, captions.json and config.json for `pairs` pairs
// (every third pair unchanged, every fourth in the test split).
struct SyntheticSource {
  std::filesystem::path masks_dir;
  std::filesystem::path captions_file;
  std::filesystem::path config_file;
  std::vector<std::string> ids;
};
SyntheticSource write_synthetic_source(const std::filesystem::path& root, int pairs,
                                       std::uint64_t seed, int size = 48);

}  // namespace rsica::testing
