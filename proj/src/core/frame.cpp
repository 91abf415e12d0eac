#include "mvcnn/core/frame.hpp"

#include "mvcnn/core/error.hpp"

namespace mvcnn {

Frame::Frame(int width, int height, std::uint8_t fill)
    : Frame(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                         static_cast<std::size_t>(std::max(height, 0)),
                                                     fill)) {}

Frame::Frame(int width, int height, std::vector<std::uint8_t> luma)
    : width_(width), height_(height), luma_(std::move(luma)) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "frame dimensions must be positive");
  require(luma_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
          ErrorCode::kShapeMismatch, "luma length != width*height");
}

void Frame::fill_neutral_chroma() {
  const auto n = static_cast<std::size_t>((width_ + 1) / 2) * static_cast<std::size_t>((height_ + 1) / 2);
  chroma_u_ = std::vector<std::uint8_t>(n, 128);
  chroma_v_ = std::vector<std::uint8_t>(n, 128);
}

void Clip::validate(int min_frames) const {
  if (length() < min_frames)
    fail(ErrorCode::kInvalidArgument,
         "clip '" + clip_id + "' has " + std::to_string(length()) + " frames, need " + std::to_string(min_frames));
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].width() != width() || frames[i].height() != height())
      fail(ErrorCode::kShapeMismatch, "clip '" + clip_id + "' frame dimensions differ", static_cast<std::int64_t>(i));
  }
}

}  // namespace mvcnn
