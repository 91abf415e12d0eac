#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mvcnn {

// Binary (P5) 8-bit grayscale.
void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels);

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};
PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace mvcnn
