#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvcnn/core/frame.hpp"
#include "mvcnn/motion/flow.hpp"
#include "mvcnn/nn/tensor.hpp"
#include "mvcnn/videoio/codec.hpp"
#include "mvcnn/videoio/dataset.hpp"

namespace mvcnn::pipeline {

// Per-frame motion maps of one clip. Entry i describes motion from frame i-1
// to frame i; entry 0 is zero.
struct ClipFeatures {
  std::string clip_id;
  int label = 0;
  videoio::Split split = videoio::Split::kTrain;
  std::vector<motion::FlowField> mv;    // decoded, gap-filled, rasterized MVs
  std::vector<motion::FlowField> flow;  // dense optical flow (empty if not requested)
  std::vector<Frame> frames;            // decoded luma (empty if not requested)

  int length() const;
};

struct FeatureConfig {
  videoio::GopConfig gop;
  motion::FlowConfig flow;
  bool with_flow = true;
  bool with_frames = true;
  std::filesystem::path flow_cache;  // empty: compute in memory only
  int threads = 1;                   // 0 = all cores
};

// encode -> MVS1 bytes -> decode vectors -> fill I-frame gaps -> rasterize
// to the clip resolution (no vector rescaling).
std::vector<motion::FlowField> mv_maps(const Clip& clip, const videoio::GopConfig& gop);

// Dense flow per frame pair, read from / written to `cache_dir` when given.
std::vector<motion::FlowField> flow_maps(const Clip& clip, const motion::FlowConfig& cfg,
                                         const std::filesystem::path& cache_dir = {});

// <cache_dir>/<config tag>/<clip_id>/<frame index>.flow
std::filesystem::path flow_cache_path(const std::filesystem::path& cache_dir, const motion::FlowConfig& cfg,
                                      const std::string& clip_id, int frame);

ClipFeatures prepare_clip(const Clip& clip, videoio::Split split, const FeatureConfig& cfg);

struct PreparedData {
  int num_classes = 0;
  std::vector<int> mirror_labels;  // see mirror_label_map
  std::vector<ClipFeatures> train;
  std::vector<ClipFeatures> test;
};

PreparedData prepare_dataset(const videoio::DatasetManifest& manifest, const std::vector<Clip>& clips,
                             const FeatureConfig& cfg);

enum class InputKind { kMotionVectors, kFlow, kSpatial };

// Unaugmented network input for the window starting at t0: a [2*stack, H, W]
// motion stack, or for kSpatial the window's middle frame as three identical
// channels scaled to [-1, 1].
nn::Tensor<float> window_input(const ClipFeatures& clip, InputKind kind, int t0, int stack);

// Window starts 0, stride, 2*stride, ... while a full stack fits.
std::vector<int> window_starts(int clip_length, int stack, int stride);

}  // namespace mvcnn::pipeline
