#include "mvcnn/videoio/codec.hpp"

#include <string>

#include "mvcnn/motion/block_search.hpp"
#include "mvcnn/videoio/container.hpp"

namespace mvcnn::videoio {

void GopConfig::validate() const {
  require(gop_length >= 2, ErrorCode::kInvalidArgument, "gop_length must be >= 2");
  require(block_size == 8 || block_size == 16, ErrorCode::kInvalidArgument, "block_size must be 8 or 16");
  require(search_range >= 1 && search_range <= 127, ErrorCode::kInvalidArgument, "search_range must be in [1,127]");
}

FrameType frame_type_at(int index, int gop_length) {
  return index % gop_length == 0 ? FrameType::kI : FrameType::kP;
}

void CompressedClip::validate() const {
  gop.validate();
  const auto n = frame_types.size();
  if (width <= 0 || height <= 0 || width % gop.block_size != 0 || height % gop.block_size != 0)
    fail(ErrorCode::kCorrupt, "frame dimensions are not multiples of the block size");
  if (luma.size() != n || motion.size() != n) fail(ErrorCode::kCorrupt, "payload frame count != header frame count");
  const int bx = width / gop.block_size, by = height / gop.block_size;
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::int64_t>(i);
    if (frame_types[i] != frame_type_at(static_cast<int>(i), gop.gop_length))
      fail(ErrorCode::kCorrupt, "frame type sequence inconsistent with gop_length", idx);
    if (luma[i].size() != static_cast<std::size_t>(width) * height)
      fail(ErrorCode::kCorrupt, "luma plane has wrong size", idx);
    const auto& f = motion[i];
    if (f.frame_type() != frame_types[i]) fail(ErrorCode::kCorrupt, "motion record type mismatch", idx);
    if (frame_types[i] == FrameType::kI) {
      if (f.has_vectors()) fail(ErrorCode::kCorrupt, "I-frame carries motion vectors", idx);
    } else if (f.blocks_x() != bx || f.blocks_y() != by || f.block_size() != gop.block_size || !f.has_vectors()) {
      fail(ErrorCode::kCorrupt, "P-frame motion record has wrong grid", idx);
    }
  }
}

CompressedClip encode(const Clip& clip, const GopConfig& cfg) {
  cfg.validate();
  clip.validate(1);
  const int w = clip.width(), h = clip.height();
  if (w % cfg.block_size != 0 || h % cfg.block_size != 0)
    fail(ErrorCode::kShapeMismatch, "clip " + std::to_string(w) + "x" + std::to_string(h) +
                                        " is not a multiple of block size " + std::to_string(cfg.block_size));
  if (w > 0xFFFF || h > 0xFFFF) fail(ErrorCode::kShapeMismatch, "clip dimensions exceed 65535");
  CompressedClip cc;
  cc.width = w;
  cc.height = h;
  cc.gop = cfg;
  const int bx = w / cfg.block_size, by = h / cfg.block_size;
  for (int i = 0; i < clip.length(); ++i) {
    const auto type = frame_type_at(i, cfg.gop_length);
    const auto& cur = clip.frames[static_cast<std::size_t>(i)];
    cc.frame_types.push_back(type);
    cc.luma.emplace_back(cur.luma().begin(), cur.luma().end());
    MotionField field(bx, by, cfg.block_size, type);
    if (type == FrameType::kP) {
      const auto& ref = clip.frames[static_cast<std::size_t>(i - 1)];
      for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x) {
          const auto r = motion::three_step_search(cur, ref, {x * cfg.block_size, y * cfg.block_size},
                                                   cfg.block_size, cfg.search_range);
          field.at(x, y) = {r.dx, r.dy};
        }
    }
    cc.motion.push_back(std::move(field));
  }
  return cc;
}

std::vector<Frame> decode_frames(const CompressedClip& cc) {
  cc.validate();
  std::vector<Frame> frames;
  frames.reserve(cc.luma.size());
  for (const auto& plane : cc.luma) frames.emplace_back(cc.width, cc.height, plane);
  return frames;
}

std::vector<MotionField> decode_motion_vectors(const CompressedClip& cc) {
  cc.validate();
  return cc.motion;
}

std::vector<MotionField> decode_motion_vectors(std::span<const std::uint8_t> container) {
  ByteReader in(container);
  if (container.size() < 4) fail(ErrorCode::kTruncated, "container shorter than its magic");
  if (!in.expect_tag("MVS1")) fail(ErrorCode::kBadMagic, "not an MVS1 container");
  const auto version = in.u16();
  if (version != kContainerVersion)
    fail(ErrorCode::kVersionMismatch, "container version " + std::to_string(version) + " is not supported");
  const int width = in.u16(), height = in.u16();
  GopConfig gop{0, 0, 0};
  gop.block_size = in.u16();
  gop.gop_length = in.u16();
  gop.search_range = in.u16();
  try {
    gop.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kCorrupt, std::string("container header: ") + e.what());
  }
  if (width == 0 || height == 0 || width % gop.block_size || height % gop.block_size)
    fail(ErrorCode::kCorrupt, "frame dimensions are not multiples of the block size");
  const auto count = in.u32();
  const auto types = in.raw(count);
  const int bx = width / gop.block_size, by = height / gop.block_size;
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  std::vector<MotionField> fields;
  fields.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::int64_t>(i);
    if (types[i] > 1) fail(ErrorCode::kCorrupt, "invalid frame type byte", idx);
    const auto type = static_cast<FrameType>(types[i]);
    if (type != frame_type_at(static_cast<int>(i), gop.gop_length))
      fail(ErrorCode::kCorrupt, "frame type sequence inconsistent with gop_length", idx);
    const std::size_t record = type == FrameType::kP ? 2 * static_cast<std::size_t>(bx) * by : 0;
    // The CRC trailer must still follow this frame's data.
    if (in.remaining() < plane + record + 4)
      fail(ErrorCode::kTruncated, "payload ends inside frame " + std::to_string(i), idx);
    in.raw(plane);
    MotionField field(bx, by, gop.block_size, type);
    if (type == FrameType::kP) {
      for (auto& mv : field.vectors()) {
        mv.dx = in.i8();
        mv.dy = in.i8();
      }
    }
    fields.push_back(std::move(field));
  }
  if (in.remaining() != 4) fail(ErrorCode::kCorrupt, "unexpected bytes after last frame");
  checked_payload(container);
  return fields;
}

}  // namespace mvcnn::videoio
