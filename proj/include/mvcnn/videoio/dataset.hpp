#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvcnn/core/frame.hpp"

namespace mvcnn::videoio {

enum class Split { kTrain, kTest };

struct ClipEntry {
  std::string clip_id;
  int label = 0;
  Split split = Split::kTrain;
  friend bool operator==(const ClipEntry&, const ClipEntry&) = default;
};

struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<ClipEntry> clips;
  std::uint64_t seed = 0;
  int resolution = 64;
  int clip_length = 24;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::vector<std::string> ids(Split split) const;
  void validate() const;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Eight classes distinguished only by the motion of textured foreground
// shapes over a static textured background. Shape, texture and mid-clip
// placement are drawn from the same distributions for every class.
const std::vector<std::string>& motionshapes_classes();

struct MotionShapesConfig {
  std::uint64_t seed = 7;
  int clips_per_class = 50;
  int resolution = 64;
  int clip_length = 24;
  double train_fraction = 0.8;
  double noise_sigma = 2.0;
};

std::pair<DatasetManifest, std::vector<Clip>> generate_motionshapes(const MotionShapesConfig& cfg);

// Renders a single clip; generate_motionshapes calls this per (class, index).
Clip render_motionshapes_clip(const MotionShapesConfig& cfg, int label, int index);

// On-disk layout: <dir>/manifest.json and <dir>/clips/<clip_id>.raw holding
// clip_length consecutive resolution^2 luma planes.
void save_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest, const std::vector<Clip>& clips);
DatasetManifest load_manifest(const std::filesystem::path& dir);
Clip load_clip(const std::filesystem::path& dir, const DatasetManifest& manifest, const ClipEntry& entry);

}  // namespace mvcnn::videoio
