#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mvcnn/core/frame.hpp"
#include "mvcnn/nn/tensor.hpp"

namespace testing {

// Smooth texture: sum of a few low-frequency sinusoids with well defined
// gradients.
inline double smooth_texture(double x, double y, std::uint64_t seed, double min_period = 32.0,
                             double max_period = 64.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 128.0;
  constexpr int kWaves = 6;
  const double base = 3.141592653589793 * u(rng);
  for (int k = 0; k < kWaves; ++k) {
    const double period = min_period + (max_period - min_period) * u(rng);
    const double angle = base + 3.141592653589793 * (k + 0.3 * u(rng)) / kWaves;
    const double phase = 6.283185307179586 * u(rng);
    const double amp = 14.0 + 6.0 * u(rng);
    v += amp * std::sin(6.283185307179586 * (x * std::cos(angle) + y * std::sin(angle)) / period + phase);
  }
  return v;
}

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::fmin(255.0, std::fmax(0.0, v))));
}

// Frame whose pixel (x, y) shows texture point (x - dx, y - dy).
inline mvcnn::Frame textured_frame(int w, int h, std::uint64_t seed, double dx = 0.0, double dy = 0.0,
                                   double min_period = 32.0, double max_period = 64.0) {
  mvcnn::Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.at(x, y) = clamp_u8(smooth_texture(x - dx, y - dy, seed, min_period, max_period));
  return f;
}

// Lattice of Gaussian bumps (period 24, sigma 10) at a seeded offset. Every
// 16x16 block sees a radial SAD basin wider than the +-7 search window, so
// greedy block searches can reach the true shift. Pixel (x, y) shows lattice
// point (x - dx, y - dy).
inline mvcnn::Frame bump_frame(int w, int h, std::uint64_t seed, int dx = 0, int dy = 0) {
  constexpr double kPeriod = 24.0;
  constexpr double kSigma = 10.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, kPeriod);
  const double ox = u(rng), oy = u(rng);
  mvcnn::Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double fx = std::remainder(x - dx - ox, kPeriod);
      const double fy = std::remainder(y - dy - oy, kPeriod);
      f.at(x, y) = clamp_u8(30.0 + 200.0 * std::exp(-(fx * fx + fy * fy) / (2.0 * kSigma * kSigma)));
    }
  return f;
}

inline mvcnn::Frame noise_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  mvcnn::Frame f(w, h);
  for (auto& p : f.luma()) p = static_cast<std::uint8_t>(d(rng));
  return f;
}

template <typename T>
mvcnn::nn::Tensor<T> random_tensor(const mvcnn::nn::Shape& shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  mvcnn::nn::Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(n(rng));
  return t;
}

// max |a-b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::fabs(a - b) / std::fmax(floor, std::fmax(std::fabs(a), std::fabs(b)));
}

}  // namespace testing
