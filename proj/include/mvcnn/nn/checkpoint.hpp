#pragma once

#include <filesystem>

#include "mvcnn/core/binary_io.hpp"
#include "mvcnn/nn/network.hpp"

namespace mvcnn::nn {

// NNW1 layout (little-endian):
//   "NNW1" u16 version=1
//   u16 in_channels u16 in_h u16 in_w u16 num_classes u16 layer_count
//   per layer: u8 kind, u8 name_len, name bytes, u16 in_channels, u16 out_channels,
//              u16 kernel, u16 stride, u16 pad, f32 dropout
//   per parameter (layer order): u32 count, count x f32
//   u32 CRC32 of all preceding bytes
inline constexpr std::uint16_t kCheckpointVersion = 1;

Bytes serialize_checkpoint(const Network<float>& net);
Network<float> deserialize_checkpoint(std::span<const std::uint8_t> data);

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

// CRC32 over serialized parameters; used to prove a network was not modified.
std::uint32_t parameter_checksum(const Network<float>& net);

}  // namespace mvcnn::nn
