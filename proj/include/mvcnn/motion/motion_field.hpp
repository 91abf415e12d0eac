#pragma once

#include <cstdint>
#include <vector>

#include "mvcnn/core/error.hpp"

namespace mvcnn::motion {

enum class FrameType : std::uint8_t { kI = 0, kP = 1 };

struct MotionVector {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

// Block-level motion for one frame. A vector (dx, dy) at a block means the
// block's content sits at (x - dx, y - dy) in the reference frame, i.e. it is
// the displacement the content underwent between the two frames.
// I-tagged fields carry no vectors until gap-filled.
class MotionField {
 public:
  MotionField() = default;
  MotionField(int blocks_x, int blocks_y, int block_size, FrameType type)
      : blocks_x_(blocks_x), blocks_y_(blocks_y), block_size_(block_size), type_(type) {
    require(blocks_x > 0 && blocks_y > 0 && block_size > 0, ErrorCode::kInvalidArgument,
            "motion field grid must be non-empty");
    if (type == FrameType::kP) vectors_.assign(static_cast<std::size_t>(blocks_x) * blocks_y, {});
  }

  static MotionField zeros(int blocks_x, int blocks_y, int block_size) {
    return MotionField(blocks_x, blocks_y, block_size, FrameType::kP);
  }

  int blocks_x() const noexcept { return blocks_x_; }
  int blocks_y() const noexcept { return blocks_y_; }
  int block_size() const noexcept { return block_size_; }
  int width() const noexcept { return blocks_x_ * block_size_; }
  int height() const noexcept { return blocks_y_ * block_size_; }
  FrameType frame_type() const noexcept { return type_; }
  bool has_vectors() const noexcept { return !vectors_.empty(); }

  const MotionVector& at(int bx, int by) const { return vectors_.at(index(bx, by)); }
  MotionVector& at(int bx, int by) { return vectors_.at(index(bx, by)); }
  const std::vector<MotionVector>& vectors() const noexcept { return vectors_; }
  std::vector<MotionVector>& vectors() noexcept { return vectors_; }

  // Same grid, retagged; used when an I-frame inherits another frame's vectors.
  MotionField with_type(FrameType type) const {
    MotionField f = *this;
    f.type_ = type;
    return f;
  }

  friend bool operator==(const MotionField&, const MotionField&) = default;

 private:
  std::size_t index(int bx, int by) const {
    if (bx < 0 || by < 0 || bx >= blocks_x_ || by >= blocks_y_)
      fail(ErrorCode::kOutOfRange, "block index outside motion field");
    return static_cast<std::size_t>(by) * blocks_x_ + bx;
  }

  int blocks_x_ = 0;
  int blocks_y_ = 0;
  int block_size_ = 16;
  FrameType type_ = FrameType::kI;
  std::vector<MotionVector> vectors_;
};

}  // namespace mvcnn::motion
