#include "mvcnn/pipeline/features.hpp"

#include <cstdio>
#include <map>

#include "mvcnn/motion/mv_maps.hpp"
#include "mvcnn/pipeline/augment.hpp"
#include "mvcnn/pipeline/parallel.hpp"
#include "mvcnn/videoio/container.hpp"

namespace mvcnn::pipeline {

int ClipFeatures::length() const {
  if (!mv.empty()) return static_cast<int>(mv.size());
  if (!flow.empty()) return static_cast<int>(flow.size());
  return static_cast<int>(frames.size());
}

std::vector<motion::FlowField> mv_maps(const Clip& clip, const videoio::GopConfig& gop) {
  const auto bytes = videoio::serialize_container(videoio::encode(clip, gop));
  const auto fields = motion::fill_iframe_gaps(videoio::decode_motion_vectors(bytes));
  std::vector<motion::FlowField> maps;
  maps.reserve(fields.size());
  for (const auto& f : fields) maps.push_back(motion::rasterize(f, clip.width(), clip.height()));
  return maps;
}

std::filesystem::path flow_cache_path(const std::filesystem::path& cache_dir, const motion::FlowConfig& cfg,
                                      const std::string& clip_id, int frame) {
  char tag[96];
  std::snprintf(tag, sizeof tag, "l%d_w%d_i%d_e%g", cfg.levels, cfg.window, cfg.iters_per_level, cfg.min_eigenvalue);
  char name[32];
  std::snprintf(name, sizeof name, "%04d.flow", frame);
  return cache_dir / tag / clip_id / name;
}

std::vector<motion::FlowField> flow_maps(const Clip& clip, const motion::FlowConfig& cfg,
                                         const std::filesystem::path& cache_dir) {
  clip.validate(1);
  std::vector<motion::FlowField> maps;
  maps.reserve(clip.frames.size());
  maps.emplace_back(clip.width(), clip.height());
  for (int i = 1; i < clip.length(); ++i) {
    if (cache_dir.empty()) {
      maps.push_back(motion::estimate_flow(clip.frames[i - 1], clip.frames[i], cfg));
      continue;
    }
    const auto path = flow_cache_path(cache_dir, cfg, clip.clip_id, i);
    if (std::filesystem::exists(path)) {
      auto f = motion::read_flow(path);
      if (f.width == clip.width() && f.height == clip.height()) {
        maps.push_back(std::move(f));
        continue;
      }
    }
    maps.push_back(motion::estimate_flow(clip.frames[i - 1], clip.frames[i], cfg));
    motion::write_flow(path, maps.back());
  }
  return maps;
}

ClipFeatures prepare_clip(const Clip& clip, videoio::Split split, const FeatureConfig& cfg) {
  ClipFeatures out;
  out.clip_id = clip.clip_id;
  out.label = clip.label;
  out.split = split;
  out.mv = mv_maps(clip, cfg.gop);
  if (cfg.with_flow) out.flow = flow_maps(clip, cfg.flow, cfg.flow_cache);
  if (cfg.with_frames) out.frames = clip.frames;
  return out;
}

PreparedData prepare_dataset(const videoio::DatasetManifest& manifest, const std::vector<Clip>& clips,
                             const FeatureConfig& cfg) {
  manifest.validate();
  std::map<std::string, const Clip*> by_id;
  for (const auto& c : clips) by_id[c.clip_id] = &c;
  std::vector<const Clip*> ordered;
  for (const auto& e : manifest.clips) {
    auto it = by_id.find(e.clip_id);
    if (it == by_id.end()) fail(ErrorCode::kInvalidArgument, "clip '" + e.clip_id + "' listed in manifest is missing");
    ordered.push_back(it->second);
  }
  std::vector<ClipFeatures> feats(ordered.size());
  parallel_for(static_cast<int>(ordered.size()), cfg.threads, [&](int i) {
    feats[static_cast<std::size_t>(i)] =
        prepare_clip(*ordered[static_cast<std::size_t>(i)], manifest.clips[static_cast<std::size_t>(i)].split, cfg);
  });
  PreparedData data;
  data.num_classes = manifest.num_classes();
  data.mirror_labels = mirror_label_map(manifest.class_names);
  for (auto& f : feats) (f.split == videoio::Split::kTrain ? data.train : data.test).push_back(std::move(f));
  return data;
}

nn::Tensor<float> window_input(const ClipFeatures& clip, InputKind kind, int t0, int stack) {
  require(stack > 0, ErrorCode::kInvalidArgument, "stack length must be positive");
  if (t0 < 0 || t0 + stack > clip.length())
    fail(ErrorCode::kOutOfRange, "window [" + std::to_string(t0) + ", " + std::to_string(t0 + stack) +
                                     ") exceeds clip '" + clip.clip_id + "' of length " +
                                     std::to_string(clip.length()));
  switch (kind) {
    case InputKind::kMotionVectors:
      return motion::stack_inputs(clip.mv, t0, stack);
    case InputKind::kFlow:
      require(!clip.flow.empty(), ErrorCode::kInvalidArgument, "clip '" + clip.clip_id + "' has no flow");
      return motion::stack_inputs(clip.flow, t0, stack);
    case InputKind::kSpatial: {
      require(!clip.frames.empty(), ErrorCode::kInvalidArgument, "clip '" + clip.clip_id + "' has no frames");
      const Frame& f = clip.frames[static_cast<std::size_t>(t0 + stack / 2)];
      const std::size_t plane = static_cast<std::size_t>(f.width()) * f.height();
      nn::Tensor<float> out({3, f.height(), f.width()});
      const auto luma = f.luma();
      for (std::size_t i = 0; i < plane; ++i) {
        const float v = (static_cast<float>(luma[i]) - 128.0f) / 128.0f;
        out[i] = v;
        out[plane + i] = v;
        out[2 * plane + i] = v;
      }
      return out;
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown input kind");
}

std::vector<int> window_starts(int clip_length, int stack, int stride) {
  require(stride > 0, ErrorCode::kInvalidArgument, "evaluation stride must be positive");
  std::vector<int> starts;
  for (int t = 0; t + stack <= clip_length; t += stride) starts.push_back(t);
  return starts;
}

}  // namespace mvcnn::pipeline
