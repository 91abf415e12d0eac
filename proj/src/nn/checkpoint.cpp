#include "mvcnn/nn/checkpoint.hpp"

namespace mvcnn::nn {

namespace {

void write_params(ByteWriter& out, const Network<float>& net) {
  for (const auto* p : net.parameters()) {
    out.u32(static_cast<std::uint32_t>(p->size()));
    for (float v : p->values()) out.f32(v);
  }
}

std::uint16_t narrow16(int v, const char* what) {
  if (v < 0 || v > 0xFFFF) fail(ErrorCode::kOutOfRange, std::string(what) + " does not fit the checkpoint format");
  return static_cast<std::uint16_t>(v);
}

}  // namespace

Bytes serialize_checkpoint(const Network<float>& net) {
  ByteWriter out;
  out.tag("NNW1");
  out.u16(kCheckpointVersion);
  const auto& in = net.input_shape();
  out.u16(narrow16(in[0], "input channels"));
  out.u16(narrow16(in[1], "input height"));
  out.u16(narrow16(in[2], "input width"));
  out.u16(narrow16(net.num_classes(), "num_classes"));
  out.u16(narrow16(static_cast<int>(net.layers().size()), "layer count"));
  for (const auto& spec : net.layers()) {
    out.u8(static_cast<std::uint8_t>(spec.kind));
    if (spec.name.size() > 255) fail(ErrorCode::kOutOfRange, "layer name too long");
    out.u8(static_cast<std::uint8_t>(spec.name.size()));
    out.tag(spec.name);
    out.u16(narrow16(spec.in_channels, "in_channels"));
    out.u16(narrow16(spec.out_channels, "out_channels"));
    out.u16(narrow16(spec.kernel, "kernel"));
    out.u16(narrow16(spec.stride, "stride"));
    out.u16(narrow16(spec.pad, "pad"));
    out.f32(spec.dropout);
  }
  write_params(out, net);
  out.crc_trailer();
  return std::move(out).take();
}

Network<float> deserialize_checkpoint(std::span<const std::uint8_t> data) {
  if (data.size() < 4) fail(ErrorCode::kTruncated, "checkpoint shorter than its magic");
  if (!ByteReader(data).expect_tag("NNW1")) fail(ErrorCode::kBadMagic, "not an NNW1 checkpoint");
  ByteReader in(checked_payload(data));
  in.expect_tag("NNW1");
  const auto version = in.u16();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) + " is not supported");
  Shape input{in.u16(), in.u16(), in.u16()};
  const int num_classes = in.u16();
  const int layer_count = in.u16();
  std::vector<LayerSpec> layers;
  for (int i = 0; i < layer_count; ++i) {
    LayerSpec spec;
    const auto kind = in.u8();
    if (kind < 1 || kind > 6) fail(ErrorCode::kCorrupt, "unknown layer kind " + std::to_string(kind), i);
    spec.kind = static_cast<LayerKind>(kind);
    const auto name = in.raw(in.u8());
    spec.name.assign(name.begin(), name.end());
    spec.in_channels = in.u16();
    spec.out_channels = in.u16();
    spec.kernel = in.u16();
    spec.stride = in.u16();
    spec.pad = in.u16();
    spec.dropout = in.f32();
    layers.push_back(std::move(spec));
  }
  Network<float> net(input, num_classes, std::move(layers));
  for (auto* p : net.parameters()) {
    const auto count = in.u32();
    if (count != p->size()) fail(ErrorCode::kCorrupt, "parameter length does not match layer table");
    for (auto& v : p->values()) v = in.f32();
  }
  if (in.remaining() != 0) fail(ErrorCode::kCorrupt, "trailing bytes after parameters");
  return net;
}

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(net));
}

Network<float> load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

std::uint32_t parameter_checksum(const Network<float>& net) {
  ByteWriter out;
  write_params(out, net);
  return crc32(out.bytes());
}

}  // namespace mvcnn::nn
