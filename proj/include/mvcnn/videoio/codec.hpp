#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvcnn/core/binary_io.hpp"
#include "mvcnn/core/frame.hpp"
#include "mvcnn/motion/motion_field.hpp"

namespace mvcnn::videoio {

using motion::FrameType;
using motion::MotionField;

struct GopConfig {
  int gop_length = 8;
  int block_size = 16;
  int search_range = 7;

  void validate() const;
  friend bool operator==(const GopConfig&, const GopConfig&) = default;
};

// Frame i is an I-frame iff i mod gop_length == 0.
FrameType frame_type_at(int index, int gop_length);

// Emulated compressed stream: luma is stored verbatim, P-frames carry one
// motion vector per macroblock, I-frames carry none.
struct CompressedClip {
  int width = 0;
  int height = 0;
  GopConfig gop;
  std::vector<FrameType> frame_types;
  std::vector<std::vector<std::uint8_t>> luma;
  std::vector<MotionField> motion;  // one per frame; I entries are vector-less

  int frame_count() const { return static_cast<int>(frame_types.size()); }
  // Throws kCorrupt if any structural invariant is violated.
  void validate() const;

  friend bool operator==(const CompressedClip&, const CompressedClip&) = default;
};

// Runs three-step search for every macroblock of every P-frame against the
// previous frame.
CompressedClip encode(const Clip& clip, const GopConfig& cfg);

// Reconstructs the stored frames.
std::vector<Frame> decode_frames(const CompressedClip& cc);

// Motion vectors straight from a validated in-memory clip. No block search.
std::vector<MotionField> decode_motion_vectors(const CompressedClip& cc);

// Motion vectors parsed directly from MVS1 bytes, skipping luma planes. No
// block search. Structural errors name the failing frame index.
std::vector<MotionField> decode_motion_vectors(std::span<const std::uint8_t> container);

}  // namespace mvcnn::videoio
