#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rsica {

// Single-channel 8-bit raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

// Decodes an 8-bit grayscale PNG. Throws IoError for anything else.
GrayImage read_gray_png(const std::filesystem::path& path);

void write_gray_png(const std::filesystem::path& path, const GrayImage& image);

}  // namespace rsica
