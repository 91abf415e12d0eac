#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvcnn {

// 8-bit planar image. Chroma planes, when present, are half resolution.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::uint8_t fill = 0);
  Frame(int width, int height, std::vector<std::uint8_t> luma);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return luma_.empty(); }

  std::uint8_t at(int x, int y) const noexcept { return luma_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) noexcept { return luma_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> luma() const noexcept { return luma_; }
  std::span<std::uint8_t> luma() noexcept { return luma_; }

  bool has_chroma() const noexcept { return chroma_u_.has_value(); }
  // Adds neutral (128) half-resolution U/V planes.
  void fill_neutral_chroma();
  const std::optional<std::vector<std::uint8_t>>& chroma_u() const noexcept { return chroma_u_; }
  const std::optional<std::vector<std::uint8_t>>& chroma_v() const noexcept { return chroma_v_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> luma_;
  std::optional<std::vector<std::uint8_t>> chroma_u_;
  std::optional<std::vector<std::uint8_t>> chroma_v_;
};

struct Clip {
  std::vector<Frame> frames;
  int label = 0;
  double fps_nominal = 25.0;
  std::string clip_id;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int length() const { return static_cast<int>(frames.size()); }

  // Throws unless all frames share dimensions and there are at least
  // `min_frames` of them.
  void validate(int min_frames) const;

  friend bool operator==(const Clip&, const Clip&) = default;
};

}  // namespace mvcnn
