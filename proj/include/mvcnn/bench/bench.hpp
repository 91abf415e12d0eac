#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvcnn/core/binary_io.hpp"
#include "mvcnn/core/frame.hpp"
#include "mvcnn/motion/flow.hpp"
#include "mvcnn/nn/network.hpp"
#include "mvcnn/pipeline/evaluate.hpp"
#include "mvcnn/videoio/codec.hpp"

namespace mvcnn::bench {

enum class Stage { kMvDecode, kMvEncode, kFlow, kCnnForward, kTotal };
std::string to_string(Stage s);

struct StageTiming {
  std::string stage;
  std::int64_t frames = 0;  // per iteration
  double seconds = 0.0;     // median over iterations
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  double fps = 0.0;         // frames / seconds
  int iterations = 0;
  bool noisy = false;       // fewer than 5 iterations or no warmup
  std::uint64_t sad_evaluations = 0;  // during the timed iterations
};

// Median-of-iterations timing of `run`, which processes `frames` frames per
// call. Rejects frames <= 0 and iters <= 0.
StageTiming time_stage(const std::string& name, std::int64_t frames, const std::function<void()>& run, int warmup,
                       int iters);

// Everything a stage touches, prepared in memory before timing.
struct Workload {
  std::vector<Clip> clips;
  std::vector<Bytes> containers;  // MVS1 bytes, one per clip
  videoio::GopConfig gop;
  motion::FlowConfig flow;
  const nn::Network<float>* temporal = nullptr;
  const nn::Network<float>* spatial = nullptr;  // optional second stream
  int stack = 10;
  pipeline::FusionWeights fusion;

  // Encodes every clip into containers.
  static Workload from_clips(std::vector<Clip> clips, const videoio::GopConfig& gop);
  std::int64_t frame_count() const;
};

// mv_decode:   MVs parsed from container bytes (no block search)
// mv_encode:   three-step search over every P-frame
// flow:        dense flow for every consecutive frame pair
// cnn_forward: one forward per non-overlapping window of `stack` frames on
//              prebuilt inputs, both streams when present; counts stack frames
// total:       bytes -> decode -> gap fill -> rasterize -> stack -> forward(s)
//              -> fuse, counting stack frames per window
StageTiming bench_stage(Stage stage, const Workload& workload, int warmup, int iters);

struct BenchConfig {
  int warmup = 1;
  int iters = 5;
  int threads = 1;  // > 1 adds a separately reported parallel total
  std::string hardware_note;
};

struct BenchReport {
  std::vector<StageTiming> stages;
  std::optional<StageTiming> parallel_total;
  double total_fps = 0.0;
  std::string hardware_note;
  int warmup = 0;
  int iterations = 0;
  int width = 0;
  int height = 0;
  static constexpr double kRealTimeFps = 25.0;

  bool real_time() const { return total_fps > kRealTimeFps; }
  const StageTiming* stage(const std::string& name) const;
};

BenchReport bench_pipeline(const Workload& workload, const BenchConfig& cfg);

void write_report_text(std::ostream& out, const BenchReport& report);
void write_report_csv(std::ostream& out, const BenchReport& report);

}  // namespace mvcnn::bench
