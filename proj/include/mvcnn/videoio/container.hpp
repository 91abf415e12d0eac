#pragma once

#include <filesystem>

#include "mvcnn/videoio/codec.hpp"

namespace mvcnn::videoio {

// MVS1 layout (little-endian):
//   "MVS1" u16 version=1 u16 width u16 height u16 block_size u16 gop_length
//   u16 search_range u32 frame_count u8[frame_count] types (0=I, 1=P)
//   per frame: width*height luma bytes, then for P-frames
//              (width/block)*(height/block) pairs of i8 (dx, dy), row-major
//   u32 CRC32 of all preceding bytes
inline constexpr std::uint16_t kContainerVersion = 1;

Bytes serialize_container(const CompressedClip& cc);
CompressedClip deserialize_container(std::span<const std::uint8_t> data);

void write_container(const CompressedClip& cc, const std::filesystem::path& path);
CompressedClip read_container(const std::filesystem::path& path);

}  // namespace mvcnn::videoio
