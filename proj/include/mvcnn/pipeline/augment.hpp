#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvcnn/nn/tensor.hpp"

namespace mvcnn::pipeline {

struct AugmentConfig {
  std::vector<double> scales{1.0, 0.875, 0.75};
  double flip_probability = 0.5;
  int out_size = 64;
  // Label of a mirrored sample, indexed by the original label. Empty keeps
  // labels unchanged.
  std::vector<int> mirror_labels;

  void validate() const;
};

// Square crop window [x0, x0+side) x [y0, y0+side) of a sample, plus mirroring.
struct CropWindow {
  int x0 = 0;
  int y0 = 0;
  int side = 0;
  bool flip = false;
  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

enum class SampleKind {
  kImage,        // plain channels
  kMotionStack,  // channel pairs (dx, dy); mirroring negates dx
};

// Scale drawn uniformly from cfg.scales, side = round(scale * min(H, W)),
// position uniform, flip with cfg.flip_probability.
// Pairs classes whose names differ by left/right or cw/ccw; other classes
// map to themselves.
std::vector<int> mirror_label_map(const std::vector<std::string>& class_names);

CropWindow sample_crop(int height, int width, const AugmentConfig& cfg, std::mt19937_64& rng);

// Centered window at scale 1.0, no flip.
CropWindow center_crop(int height, int width);

// Crops [C,H,W], resizes bilinearly to out_size x out_size, mirrors if
// requested. The same window applies to every channel.
nn::Tensor<float> apply_crop(const nn::Tensor<float>& sample, const CropWindow& window, int out_size, SampleKind kind);

nn::Tensor<float> augment_train(const nn::Tensor<float>& sample, const AugmentConfig& cfg, std::uint64_t seed,
                                SampleKind kind);
nn::Tensor<float> augment_test(const nn::Tensor<float>& sample, int out_size, SampleKind kind);

}  // namespace mvcnn::pipeline
