#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvcnn/core/binary_io.hpp"
#include "mvcnn/core/frame.hpp"

namespace mvcnn::motion {

// Dense two-channel displacement map. Used both for optical flow (u, v in
// pixels/frame such that next(x + u, y + v) ~ prev(x, y)) and for rasterized
// block motion vectors.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), u(static_cast<std::size_t>(w) * h, 0.0f), v(static_cast<std::size_t>(w) * h, 0.0f) {}

  float& u_at(int x, int y) { return u[static_cast<std::size_t>(y) * width + x]; }
  float& v_at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  float u_at(int x, int y) const { return u[static_cast<std::size_t>(y) * width + x]; }
  float v_at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct FlowConfig {
  int levels = 3;
  int window = 7;
  int iters_per_level = 3;
  // Windows whose structure tensor has a smaller minimum eigenvalue keep zero update.
  double min_eigenvalue = 1.0;
};

// Coarse-to-fine windowed least-squares flow with bilinear warping.
FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg = {});

// Raw export: u32 width, u32 height, then u plane and v plane as f32, little-endian.
Bytes serialize_flow(const FlowField& flow);
FlowField deserialize_flow(std::span<const std::uint8_t> data);
void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path);

}  // namespace mvcnn::motion
