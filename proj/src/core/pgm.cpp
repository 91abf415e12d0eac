#include "mvcnn/core/pgm.hpp"

#include <fstream>
#include <string>
#include <vector>

#include "mvcnn/core/error.hpp"

namespace mvcnn {

void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels) {
  require(pixels.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
          ErrorCode::kShapeMismatch, "pgm pixel count mismatch");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  PgmImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255) fail(ErrorCode::kBadMagic, "not an 8-bit P5 pgm: " + path.string());
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) fail(ErrorCode::kTruncated, "pgm pixel data truncated: " + path.string());
  return img;
}

}  // namespace mvcnn
