#include "mvcnn/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "mvcnn/motion/block_search.hpp"
#include "mvcnn/motion/mv_maps.hpp"
#include "mvcnn/nn/loss.hpp"
#include "mvcnn/pipeline/features.hpp"
#include "mvcnn/pipeline/parallel.hpp"
#include "mvcnn/videoio/container.hpp"

namespace mvcnn::bench {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kMvDecode:
      return "mv_decode";
    case Stage::kMvEncode:
      return "mv_encode";
    case Stage::kFlow:
      return "flow";
    case Stage::kCnnForward:
      return "cnn_forward";
    case Stage::kTotal:
      return "total";
  }
  return "?";
}

StageTiming time_stage(const std::string& name, std::int64_t frames, const std::function<void()>& run, int warmup,
                       int iters) {
  require(frames > 0, ErrorCode::kInvalidArgument, "benchmark workload for " + name + " is empty");
  require(iters > 0 && warmup >= 0, ErrorCode::kInvalidArgument, "need iters > 0 and warmup >= 0");
  for (int i = 0; i < warmup; ++i) run();
  const auto sad_before = motion::sad_evaluations();
  std::vector<double> secs;
  for (int i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  StageTiming t;
  t.stage = name;
  t.frames = frames;
  t.iterations = iters;
  t.noisy = iters < 5 || warmup == 0;
  t.sad_evaluations = motion::sad_evaluations() - sad_before;
  std::sort(secs.begin(), secs.end());
  const std::size_t mid = secs.size() / 2;
  t.seconds = secs.size() % 2 ? secs[mid] : 0.5 * (secs[mid - 1] + secs[mid]);
  // Clock granularity guard keeps fps finite.
  t.seconds = std::max(t.seconds, 1e-9);
  t.min_seconds = secs.front();
  t.max_seconds = secs.back();
  t.fps = static_cast<double>(frames) / t.seconds;
  return t;
}

Workload Workload::from_clips(std::vector<Clip> clips, const videoio::GopConfig& gop) {
  Workload w;
  w.gop = gop;
  for (const auto& c : clips) w.containers.push_back(videoio::serialize_container(videoio::encode(c, gop)));
  w.clips = std::move(clips);
  return w;
}

std::int64_t Workload::frame_count() const {
  std::int64_t n = 0;
  for (const auto& c : clips) n += c.length();
  return n;
}

namespace {

volatile float g_sink = 0.0f;  // keeps results observable

struct WindowSet {
  std::vector<nn::Tensor<float>> temporal;
  std::vector<nn::Tensor<float>> spatial;
};

nn::Tensor<float> as_batch(const nn::Tensor<float>& x) {
  nn::Shape s{1};
  s.insert(s.end(), x.shape().begin(), x.shape().end());
  return x.reshaped(s);
}

nn::Tensor<float> spatial_input(const Frame& f) {
  const std::size_t plane = static_cast<std::size_t>(f.width()) * f.height();
  nn::Tensor<float> out({1, 3, f.height(), f.width()});
  const auto luma = f.luma();
  for (std::size_t i = 0; i < plane; ++i) {
    const float v = (static_cast<float>(luma[i]) - 128.0f) / 128.0f;
    out[i] = out[plane + i] = out[2 * plane + i] = v;
  }
  return out;
}

// Returns the number of stack frames consumed.
std::int64_t run_clip_end_to_end(const Workload& w, const Bytes& bytes) {
  const auto cc = videoio::deserialize_container(bytes);
  const auto fields = motion::fill_iframe_gaps(videoio::decode_motion_vectors(cc));
  std::vector<motion::FlowField> maps;
  maps.reserve(fields.size());
  for (const auto& f : fields) maps.push_back(motion::rasterize(f, cc.width, cc.height));
  std::int64_t frames = 0;
  for (int t0 = 0; t0 + w.stack <= static_cast<int>(maps.size()); t0 += w.stack) {
    const auto x = as_batch(motion::stack_inputs(maps, t0, w.stack));
    const auto t_probs = nn::softmax_rows(nn::forward(*w.temporal, x, nn::Mode::kEval).logits);
    if (w.spatial) {
      const Frame frame(cc.width, cc.height, cc.luma[static_cast<std::size_t>(t0 + w.stack / 2)]);
      const auto s_probs = nn::softmax_rows(nn::forward(*w.spatial, spatial_input(frame), nn::Mode::kEval).logits);
      const std::vector<double> s(s_probs.values().begin(), s_probs.values().end());
      const std::vector<double> t(t_probs.values().begin(), t_probs.values().end());
      g_sink = static_cast<float>(pipeline::fuse(s, t, w.fusion).predicted);
    } else {
      g_sink = static_cast<float>(nn::argmax<float>(t_probs.values()));
    }
    frames += w.stack;
  }
  return frames;
}

std::int64_t windowed_frames(const Workload& w) {
  std::int64_t n = 0;
  for (const auto& c : w.clips) n += static_cast<std::int64_t>(c.length() / w.stack) * w.stack;
  return n;
}

}  // namespace

StageTiming bench_stage(Stage stage, const Workload& w, int warmup, int iters) {
  require(!w.clips.empty(), ErrorCode::kInvalidArgument, "benchmark workload has no clips");
  require(w.containers.size() == w.clips.size(), ErrorCode::kInvalidArgument,
          "benchmark workload needs one container per clip");
  const std::string name = to_string(stage);
  switch (stage) {
    case Stage::kMvDecode:
      return time_stage(name, w.frame_count(), [&] {
        for (const auto& b : w.containers) g_sink = static_cast<float>(videoio::decode_motion_vectors(b).size());
      }, warmup, iters);
    case Stage::kMvEncode:
      return time_stage(name, w.frame_count(), [&] {
        for (const auto& c : w.clips) g_sink = static_cast<float>(videoio::encode(c, w.gop).frame_count());
      }, warmup, iters);
    case Stage::kFlow: {
      std::int64_t pairs = 0;
      for (const auto& c : w.clips) pairs += std::max(0, c.length() - 1);
      return time_stage(name, pairs, [&] {
        for (const auto& c : w.clips)
          for (int i = 1; i < c.length(); ++i)
            g_sink = motion::estimate_flow(c.frames[i - 1], c.frames[i], w.flow).u[0];
      }, warmup, iters);
    }
    case Stage::kCnnForward: {
      require(w.temporal != nullptr, ErrorCode::kInvalidArgument, "cnn_forward needs a temporal network");
      WindowSet windows;
      for (std::size_t i = 0; i < w.clips.size(); ++i) {
        const auto maps = pipeline::mv_maps(w.clips[i], w.gop);
        for (int t0 = 0; t0 + w.stack <= static_cast<int>(maps.size()); t0 += w.stack) {
          windows.temporal.push_back(as_batch(motion::stack_inputs(maps, t0, w.stack)));
          if (w.spatial) windows.spatial.push_back(spatial_input(w.clips[i].frames[static_cast<std::size_t>(t0 + w.stack / 2)]));
        }
      }
      return time_stage(name, static_cast<std::int64_t>(windows.temporal.size()) * w.stack, [&] {
        for (const auto& x : windows.temporal) g_sink = nn::forward(*w.temporal, x, nn::Mode::kEval).logits[0];
        for (const auto& x : windows.spatial) g_sink = nn::forward(*w.spatial, x, nn::Mode::kEval).logits[0];
      }, warmup, iters);
    }
    case Stage::kTotal:
      require(w.temporal != nullptr, ErrorCode::kInvalidArgument, "total needs a temporal network");
      return time_stage(name, windowed_frames(w), [&] {
        for (const auto& b : w.containers) run_clip_end_to_end(w, b);
      }, warmup, iters);
  }
  fail(ErrorCode::kInvalidArgument, "unknown stage");
}

const StageTiming* BenchReport::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.stage == name) return &s;
  return nullptr;
}

BenchReport bench_pipeline(const Workload& w, const BenchConfig& cfg) {
  BenchReport r;
  r.hardware_note = cfg.hardware_note;
  r.warmup = cfg.warmup;
  r.iterations = cfg.iters;
  r.width = w.clips.empty() ? 0 : w.clips.front().width();
  r.height = w.clips.empty() ? 0 : w.clips.front().height();
  for (Stage s : {Stage::kMvDecode, Stage::kMvEncode, Stage::kFlow, Stage::kCnnForward, Stage::kTotal})
    r.stages.push_back(bench_stage(s, w, cfg.warmup, cfg.iters));
  r.total_fps = r.stages.back().fps;
  if (cfg.threads > 1) {
    r.parallel_total = time_stage("total_parallel", windowed_frames(w), [&] {
      pipeline::parallel_for(static_cast<int>(w.containers.size()), cfg.threads,
                             [&](int i) { run_clip_end_to_end(w, w.containers[static_cast<std::size_t>(i)]); });
    }, cfg.warmup, cfg.iters);
  }
  return r;
}

void write_report_text(std::ostream& out, const BenchReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "resolution %dx%d, warmup %d, iterations %d\n", r.width, r.height, r.warmup,
                r.iterations);
  out << buf;
  if (!r.hardware_note.empty()) out << "hardware: " << r.hardware_note << '\n';
  std::snprintf(buf, sizeof buf, "%-15s%9s%12s%12s%12s%12s  %s\n", "stage", "frames", "median_s", "min_s", "max_s",
                "fps", "note");
  out << buf;
  auto row = [&](const StageTiming& s) {
    std::snprintf(buf, sizeof buf, "%-15s%9lld%12.6f%12.6f%12.6f%12.1f  %s\n", s.stage.c_str(),
                  static_cast<long long>(s.frames), s.seconds, s.min_seconds, s.max_seconds, s.fps,
                  s.noisy ? "noisy" : "");
    out << buf;
  };
  for (const auto& s : r.stages) row(s);
  if (r.parallel_total) row(*r.parallel_total);

  const auto* mv = r.stage("mv_decode");
  const auto* cnn = r.stage("cnn_forward");
  out << '\n';
  std::snprintf(buf, sizeof buf, "%-10s%12s%12s%12s\n", "", "MV", "CNN", "Total");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s%12.1f%12.1f%12.1f\n", "fps", mv ? mv->fps : 0.0, cnn ? cnn->fps : 0.0,
                r.total_fps);
  out << buf;
  std::snprintf(buf, sizeof buf, "real-time threshold %.0f fps: %s (total %.1f fps)\n", BenchReport::kRealTimeFps,
                r.real_time() ? "PASS" : "FAIL", r.total_fps);
  out << buf;
  out << "frame accounting: one forward over a stack counts as stack-length frames\n";
}

void write_report_csv(std::ostream& out, const BenchReport& r) {
  out << "stage,frames,median_seconds,min_seconds,max_seconds,fps,iterations,noisy,sad_evaluations\n";
  auto row = [&](const StageTiming& s) {
    out << s.stage << ',' << s.frames << ',' << s.seconds << ',' << s.min_seconds << ',' << s.max_seconds << ','
        << s.fps << ',' << s.iterations << ',' << (s.noisy ? 1 : 0) << ',' << s.sad_evaluations << '\n';
  };
  for (const auto& s : r.stages) row(s);
  if (r.parallel_total) row(*r.parallel_total);
}

}  // namespace mvcnn::bench
