#include "mvcnn/videoio/container.hpp"

#include <string>

namespace mvcnn::videoio {

Bytes serialize_container(const CompressedClip& cc) {
  require(cc.frame_count() > 0, ErrorCode::kInvalidArgument, "refusing to write a container with no frames");
  cc.validate();
  ByteWriter out;
  out.tag("MVS1");
  out.u16(kContainerVersion);
  out.u16(static_cast<std::uint16_t>(cc.width));
  out.u16(static_cast<std::uint16_t>(cc.height));
  out.u16(static_cast<std::uint16_t>(cc.gop.block_size));
  out.u16(static_cast<std::uint16_t>(cc.gop.gop_length));
  out.u16(static_cast<std::uint16_t>(cc.gop.search_range));
  out.u32(static_cast<std::uint32_t>(cc.frame_count()));
  for (auto t : cc.frame_types) out.u8(static_cast<std::uint8_t>(t));
  for (int i = 0; i < cc.frame_count(); ++i) {
    const auto fi = static_cast<std::size_t>(i);
    out.raw(cc.luma[fi]);
    if (cc.frame_types[fi] == FrameType::kP) {
      for (const auto& mv : cc.motion[fi].vectors()) {
        if (mv.dx < -128 || mv.dx > 127 || mv.dy < -128 || mv.dy > 127)
          fail(ErrorCode::kOutOfRange, "motion vector does not fit in i8", i);
        out.i8(static_cast<std::int8_t>(mv.dx));
        out.i8(static_cast<std::int8_t>(mv.dy));
      }
    }
  }
  out.crc_trailer();
  return std::move(out).take();
}

CompressedClip deserialize_container(std::span<const std::uint8_t> data) {
  // Structural parse first so truncation is reported against a frame index.
  auto motion = decode_motion_vectors(data);
  ByteReader in(data);
  in.expect_tag("MVS1");
  in.u16();
  CompressedClip cc;
  cc.width = in.u16();
  cc.height = in.u16();
  cc.gop.block_size = in.u16();
  cc.gop.gop_length = in.u16();
  cc.gop.search_range = in.u16();
  const auto count = in.u32();
  for (auto b : in.raw(count)) cc.frame_types.push_back(static_cast<FrameType>(b));
  const std::size_t plane = static_cast<std::size_t>(cc.width) * cc.height;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto luma = in.raw(plane);
    cc.luma.emplace_back(luma.begin(), luma.end());
    if (cc.frame_types[i] == FrameType::kP) in.raw(2 * motion[i].vectors().size());
  }
  cc.motion = std::move(motion);
  cc.validate();
  return cc;
}

void write_container(const CompressedClip& cc, const std::filesystem::path& path) {
  write_file(path, serialize_container(cc));
}

CompressedClip read_container(const std::filesystem::path& path) { return deserialize_container(read_file(path)); }

}  // namespace mvcnn::videoio
