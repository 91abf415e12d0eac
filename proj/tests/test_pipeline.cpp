#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mvcnn/motion/mv_maps.hpp"
#include "mvcnn/nn/loss.hpp"
#include "mvcnn/pipeline/augment.hpp"
#include "mvcnn/pipeline/evaluate.hpp"
#include "mvcnn/pipeline/experiment.hpp"
#include "mvcnn/pipeline/features.hpp"
#include "mvcnn/pipeline/parallel.hpp"
#include "support.hpp"

using namespace mvcnn;
using namespace mvcnn::pipeline;

namespace {

float at(const nn::Tensor<float>& t, int c, int y, int x) {
  return t[(static_cast<std::size_t>(c) * t.dim(1) + y) * t.dim(2) + x];
}

bool same_values(const nn::Tensor<float>& a, const nn::Tensor<float>& b) {
  return a.shape() == b.shape() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

// Dataset small enough for a few-second end-to-end run.
const PreparedData& tiny_data() {
  static const PreparedData data = [] {
    videoio::MotionShapesConfig g;
    g.clips_per_class = 2;
    g.clip_length = 16;
    g.train_fraction = 0.5;
    const auto [manifest, clips] = videoio::generate_motionshapes(g);
    FeatureConfig f;
    f.threads = 0;
    return prepare_dataset(manifest, clips, f);
  }();
  return data;
}

StreamTraining tiny_training() {
  StreamTraining t;
  t.steps = 3;
  t.batch = 2;
  t.eval_stride = 6;
  return t;
}

}  // namespace

TEST_CASE("augment config validation") {
  CHECK_NOTHROW(AugmentConfig{}.validate());
  AugmentConfig bad;
  bad.scales = {1.0, 1.2};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.scales.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.flip_probability = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.mirror_labels = {1, 1};  // not an involution
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("scale 1 without flip is the identity") {
  const auto x = testing::random_tensor<float>({4, 64, 64}, 1);
  CHECK(same_values(apply_crop(x, {0, 0, 64, false}, 64, SampleKind::kMotionStack), x));
  CHECK(same_values(augment_test(x, 64, SampleKind::kMotionStack), x));
  CHECK(same_values(augment_test(x, 64, SampleKind::kImage), augment_test(x, 64, SampleKind::kImage)));
  CHECK(center_crop(64, 64) == CropWindow{0, 0, 64, false});
}

TEST_CASE("augment_test equals the centered full-scale crop") {
  const auto x = testing::random_tensor<float>({2, 48, 80}, 2);
  const auto w = center_crop(48, 80);
  CHECK(w == CropWindow{16, 0, 48, false});
  CHECK(same_values(augment_test(x, 64, SampleKind::kImage), apply_crop(x, w, 64, SampleKind::kImage)));
}

TEST_CASE("scale 0.75 on 64x64 is a 48x48 window resized to 64x64") {
  AugmentConfig cfg;
  cfg.scales = {0.75};
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto w = sample_crop(64, 64, cfg, rng);
    CHECK(w.side == 48);
    CHECK(w.x0 >= 0);
    CHECK(w.x0 + 48 <= 64);
    CHECK(w.y0 + 48 <= 64);
  }
  const auto x = testing::random_tensor<float>({2, 64, 64}, 4);
  const auto out = augment_train(x, cfg, 9, SampleKind::kImage);
  CHECK(out.shape() == nn::Shape{2, 64, 64});
}

TEST_CASE("crop draws cover every scale and flip about half the time") {
  AugmentConfig cfg;
  std::mt19937_64 rng(5);
  std::set<int> sides;
  int flips = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto w = sample_crop(64, 64, cfg, rng);
    sides.insert(w.side);
    flips += w.flip;
  }
  CHECK(sides == std::set<int>{48, 56, 64});
  CHECK(std::abs(flips - 1000) < 120);
}

TEST_CASE("sample smaller than the crop output is still handled, zero-size is rejected") {
  const auto x = testing::random_tensor<float>({2, 32, 32}, 6);
  CHECK(apply_crop(x, center_crop(32, 32), 64, SampleKind::kImage).shape() == nn::Shape{2, 64, 64});
  CHECK_THROWS_AS(apply_crop(x, {20, 20, 16, false}, 64, SampleKind::kImage), Error);
  CHECK_THROWS_AS(apply_crop(x, {0, 0, 0, false}, 64, SampleKind::kImage), Error);
}

TEST_CASE("flipping a motion stack negates dx and leaves dy bit-identical") {
  const auto x = testing::random_tensor<float>({20, 64, 64}, 7);
  const auto flipped = apply_crop(x, {0, 0, 64, true}, 64, SampleKind::kMotionStack);
  for (int c = 0; c < 20; ++c)
    for (int y = 0; y < 64; ++y)
      for (int xx = 0; xx < 64; ++xx) {
        const float orig = at(x, c, y, 63 - xx);
        const float got = at(flipped, c, y, xx);
        if (c % 2 == 0)
          REQUIRE(got == -orig);
        else
          REQUIRE(got == orig);
      }
  const auto image = apply_crop(x, {0, 0, 64, true}, 64, SampleKind::kImage);
  CHECK(at(image, 0, 5, 0) == at(x, 0, 5, 63));
}

TEST_CASE("flip is an involution for any window") {
  const auto x = testing::random_tensor<float>({6, 64, 64}, 8);
  for (auto kind : {SampleKind::kImage, SampleKind::kMotionStack}) {
    const CropWindow w{0, 0, 64, true};
    CHECK(same_values(apply_crop(apply_crop(x, w, 64, kind), w, 64, kind), x));
    // Cropped: flip then unflip at the output size matches the plain crop.
    const CropWindow c{5, 9, 48, true};
    auto plain = c;
    plain.flip = false;
    CHECK(same_values(apply_crop(apply_crop(x, c, 64, kind), {0, 0, 64, true}, 64, kind),
                      apply_crop(x, plain, 64, kind)));
  }
}

TEST_CASE("augment_train is deterministic in its seed") {
  const auto x = testing::random_tensor<float>({4, 64, 64}, 9);
  AugmentConfig cfg;
  CHECK(same_values(augment_train(x, cfg, 11, SampleKind::kMotionStack),
                    augment_train(x, cfg, 11, SampleKind::kMotionStack)));
}

TEST_CASE("mirror label map pairs left/right and cw/ccw") {
  const auto map = mirror_label_map(videoio::motionshapes_classes());
  CHECK(map == std::vector<int>{1, 0, 2, 3, 5, 4, 6, 7});
  for (int i = 0; i < 8; ++i) CHECK(map[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])] == i);
  CHECK(mirror_label_map({"a", "b"}) == std::vector<int>{0, 1});
}

TEST_CASE("fuse examples") {
  const std::vector<double> s{0.2, 0.8}, t{0.6, 0.4};
  const auto f = fuse(s, t, {});
  CHECK(f.scores[0] == doctest::Approx(0.4667).epsilon(1e-4));
  CHECK(f.scores[1] == doctest::Approx(0.5333).epsilon(1e-4));
  CHECK(f.predicted == 1);

  const auto only_spatial = fuse(s, t, {1.0, 0.0});
  CHECK(only_spatial.scores == s);

  const std::vector<double> tie{0.5, 0.5};
  CHECK(fuse(tie, tie, {}).predicted == 0);
  const std::vector<double> three{0.2, 0.3, 0.5};
  CHECK_THROWS_AS(fuse(s, three, {}), Error);
  CHECK_THROWS_AS(fuse(s, t, {0.0, 0.0}), Error);
  CHECK_THROWS_AS(fuse(s, t, {-1.0, 2.0}), Error);
}

TEST_CASE("fuse argmax is invariant to weight and joint score rescaling") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> c(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(8), t(8);
    for (auto& v : s) v = u(rng);
    for (auto& v : t) v = u(rng);
    const auto base = fuse(s, t, {1.0, 2.0});
    const double k = c(rng);
    const auto scaled_w = fuse(s, t, {k, 2.0 * k});
    CHECK(scaled_w.predicted == base.predicted);
    for (std::size_t j = 0; j < 8; ++j) CHECK(scaled_w.scores[j] == doctest::Approx(base.scores[j]).epsilon(1e-12));
    auto s2 = s, t2 = t;
    const double a = c(rng);
    for (auto& v : s2) v *= a;
    for (auto& v : t2) v *= a;
    CHECK(fuse(s2, t2, {1.0, 2.0}).predicted == base.predicted);
  }
}

TEST_CASE("report from perfect scores is an identity confusion matrix") {
  std::vector<std::vector<double>> scores;
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) {
    std::vector<double> s(4, 0.1);
    s[static_cast<std::size_t>(i % 4)] = 0.7;
    scores.push_back(s);
    labels.push_back(i % 4);
  }
  scores.emplace_back();  // skipped clip
  labels.push_back(2);
  const auto r = report_from_scores(scores, labels, 4);
  CHECK(r.overall_accuracy == 1.0);
  CHECK(r.clips_evaluated == 12);
  CHECK(r.clips_skipped == 1);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.per_class_accuracy[static_cast<std::size_t>(i)] == 1.0);
    for (int j = 0; j < 4; ++j) CHECK(r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == (i == j ? 3 : 0));
  }
}

TEST_CASE("report accuracy is trace over total and rows sum to class counts") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> scores;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> s(5);
    for (auto& v : s) v = u(rng);
    scores.push_back(s);
    labels.push_back(i % 5);
  }
  const auto r = report_from_scores(scores, labels, 5);
  int trace = 0, total = 0;
  for (int i = 0; i < 5; ++i) {
    int row = 0;
    for (int v : r.confusion[static_cast<std::size_t>(i)]) row += v;
    CHECK(row == 12);
    trace += r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    total += row;
  }
  CHECK(r.overall_accuracy == doctest::Approx(static_cast<double>(trace) / total));
}

TEST_CASE("window starts") {
  CHECK(window_starts(24, 10, 4) == std::vector<int>{0, 4, 8, 12});
  CHECK(window_starts(24, 10, 24) == std::vector<int>{0});
  CHECK(window_starts(16, 10, 16) == std::vector<int>{0});
  CHECK(window_starts(9, 10, 4).empty());
}

TEST_CASE("features: mv maps follow the codec and entry 0 is zero") {
  const auto& data = tiny_data();
  REQUIRE(data.train.size() == 8);
  REQUIRE(data.test.size() == 8);
  CHECK(data.num_classes == 8);
  CHECK(data.mirror_labels == mirror_label_map(videoio::motionshapes_classes()));
  for (const auto& c : data.train) {
    CHECK(c.length() == 16);
    CHECK(c.mv.size() == 16);
    CHECK(c.flow.size() == 16);
    CHECK(c.frames.size() == 16);
    for (float v : c.mv[0].u) CHECK(v == 0.0f);
    for (float v : c.flow[0].v) CHECK(v == 0.0f);
  }
  videoio::MotionShapesConfig g;
  g.clips_per_class = 2;
  g.clip_length = 16;
  const auto clip = videoio::render_motionshapes_clip(g, 0, 0);
  const auto maps = mv_maps(clip, {});
  const auto cc = videoio::encode(clip, {});
  const auto rast = motion::rasterize(cc.motion[3], 64, 64);
  CHECK(maps[3] == rast);
  // I-frame 8 inherits frame 7's vectors.
  CHECK(maps[8] == maps[7]);
}

TEST_CASE("features: flow cache is written and reused") {
  const auto dir = std::filesystem::temp_directory_path() / "mvcnn_test_pipeline_cache";
  std::filesystem::remove_all(dir);
  videoio::MotionShapesConfig g;
  g.clips_per_class = 1;
  g.clip_length = 16;
  const auto clip = videoio::render_motionshapes_clip(g, 2, 0);
  const motion::FlowConfig fc;
  const auto fresh = flow_maps(clip, fc, dir);
  CHECK(std::filesystem::exists(flow_cache_path(dir, fc, clip.clip_id, 5)));
  CHECK(flow_maps(clip, fc, dir) == fresh);
  CHECK(flow_maps(clip, fc) == fresh);
}

TEST_CASE("window input shapes and spatial scaling") {
  const auto& c = tiny_data().train.front();
  CHECK(window_input(c, InputKind::kMotionVectors, 0, 10).shape() == nn::Shape{20, 64, 64});
  CHECK(window_input(c, InputKind::kFlow, 6, 10).shape() == nn::Shape{20, 64, 64});
  const auto sp = window_input(c, InputKind::kSpatial, 0, 10);
  REQUIRE(sp.shape() == nn::Shape{3, 64, 64});
  CHECK(at(sp, 0, 10, 10) == doctest::Approx((c.frames[5].at(10, 10) - 128.0) / 128.0));
  CHECK(at(sp, 2, 10, 10) == at(sp, 0, 10, 10));
  CHECK_THROWS_AS(window_input(c, InputKind::kMotionVectors, 7, 10), Error);
}

TEST_CASE("plans and batches are deterministic and relabel mirrored samples") {
  const auto& data = tiny_data();
  const auto a = plan_samples(data.train, 10, 6, 2, 77);
  const auto b = plan_samples(data.train, 10, 6, 2, 77);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].clip == b[i].clip);
    CHECK(a[i].t0 == b[i].t0);
    CHECK(a[i].crop_seed == b[i].crop_seed);
    CHECK(a[i].t0 + 10 <= 16);
  }
  // First epoch visits every clip once.
  std::set<int> first;
  for (std::size_t i = 0; i < 8; ++i) first.insert(a[i].clip);
  CHECK(first.size() == 8);

  AugmentConfig aug;
  aug.mirror_labels = data.mirror_labels;
  const auto src = make_batch_source(data.train, a, 2, 10, InputKind::kMotionVectors, InputKind::kFlow, aug);
  for (int step = 0; step < 6; ++step) {
    const auto x = src(step), y = src(step);
    CHECK(same_values(x.student_input, y.student_input));
    CHECK(x.teacher_input.shape() == nn::Shape{2, 20, 64, 64});
    for (int i = 0; i < 2; ++i) {
      const auto& p = a[static_cast<std::size_t>(step * 2 + i)];
      std::mt19937_64 rng(p.crop_seed);
      const auto w = sample_crop(64, 64, aug, rng);
      const int label = data.train[static_cast<std::size_t>(p.clip)].label;
      CHECK(x.labels[static_cast<std::size_t>(i)] == (w.flip ? data.mirror_labels[static_cast<std::size_t>(label)] : label));
    }
  }
  CHECK_THROWS_AS(src(6), Error);
}

TEST_CASE("evaluate: stride equal to the clip length uses one window per clip") {
  const auto& data = tiny_data();
  auto net = nn::build_mini_two_stream<float>({});
  net.init_he(3);
  const auto one = clip_scores(net, data.test, InputKind::kMotionVectors, 10, 16);
  const auto first = nn::forward(net, [&] {
                       auto x = augment_test(window_input(data.test[0], InputKind::kMotionVectors, 0, 10), 64,
                                             SampleKind::kMotionStack);
                       return x.reshaped({1, 20, 64, 64});
                     }(),
                                 nn::Mode::kEval);
  const auto p = nn::softmax<float>(first.logits.values());
  for (int k = 0; k < 8; ++k) CHECK(one[0][static_cast<std::size_t>(k)] == doctest::Approx(p[static_cast<std::size_t>(k)]));
  const auto r1 = evaluate(net, data.test, InputKind::kMotionVectors, 10, 4, 8);
  const auto r2 = evaluate(net, data.test, InputKind::kMotionVectors, 10, 4, 8);
  CHECK(r1.confusion == r2.confusion);
  CHECK(r1.clips_evaluated == 8);
  const auto skipped = evaluate(net, data.test, InputKind::kMotionVectors, 17, 4, 8);
  CHECK(skipped.clips_skipped == 8);
}

TEST_CASE("two-stream evaluation with zero spatial weight equals the temporal stream") {
  const auto& data = tiny_data();
  auto temporal = nn::build_mini_two_stream<float>({});
  temporal.init_he(4);
  nn::TwoStreamConfig sc;
  sc.in_channels = 3;
  sc.activation = nn::Activation::kRelu;
  auto spatial = nn::build_mini_two_stream<float>(sc);
  spatial.init_he(5);
  const auto fused = evaluate_two_stream(spatial, temporal, InputKind::kMotionVectors, data.test, 10, 4, 8, {0.0, 1.0});
  const auto alone = evaluate(temporal, data.test, InputKind::kMotionVectors, 10, 4, 8);
  CHECK(fused.confusion == alone.confusion);
}

TEST_CASE("parallel_for runs every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) { if (i == 7) fail(ErrorCode::kIo, "boom"); }), Error);
}

TEST_CASE("summaries use the sample standard deviation") {
  const auto s = summarize("EMV-ST", {0.5, 0.6, 0.7});
  CHECK(s.mean == doctest::Approx(0.6));
  CHECK(s.sd == doctest::Approx(0.1));
  CHECK(s.runs == 3);
  CHECK(summarize("x", {0.4}).sd == 0.0);
  CHECK(row_label(distill::Strategy::kScratch) == "MV-scratch");
  CHECK(row_label(distill::Strategy::kCombined) == "EMV-ST+TI");
}

TEST_CASE("tiny experiment: rows, files and reproducibility") {
  const auto dir = std::filesystem::temp_directory_path() / "mvcnn_test_pipeline_experiment";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg;
  cfg.seeds = {1, 2};
  cfg.training = tiny_training();
  cfg.out_dir = dir;
  const auto a = run_experiment(tiny_data(), cfg);
  REQUIRE(a.runs.size() == 9);
  CHECK(a.runs.front().row == kTeacherRow);
  std::vector<std::string> rows;
  for (const auto& r : a.summary()) rows.push_back(r.row);
  CHECK(rows == std::vector<std::string>{"MV-scratch", "EMV-ST", "EMV-TI", "EMV-ST+TI", "OF-teacher"});
  for (const auto& r : a.runs) {
    if (r.strategy == distill::Strategy::kSupervisionTransfer || r.strategy == distill::Strategy::kCombined) {
      CHECK(r.temperature == 2.0);
      CHECK(r.w == 4.0);
    }
  }
  CHECK(std::filesystem::exists(dir / "experiment.csv"));
  CHECK(std::filesystem::exists(dir / "experiment.txt"));
  CHECK(std::filesystem::exists(dir / "teacher" / "model.nnw"));
  CHECK(std::filesystem::exists(dir / "runs" / "ti+st_seed2" / "metrics.csv"));
  std::ifstream csv(dir / "experiment.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "strategy,seed,temperature,w,accuracy");

  cfg.out_dir.clear();
  const auto b = run_experiment(tiny_data(), cfg);
  REQUIRE(b.runs.size() == a.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) CHECK(a.runs[i].accuracy == b.runs[i].accuracy);
  std::ostringstream ta, tb;
  write_summary_table(ta, a.summary());
  write_summary_table(tb, b.summary());
  CHECK(ta.str() == tb.str());
}

TEST_CASE("temperature matrix runs every point") {
  ExperimentConfig cfg;
  cfg.seeds = {1};
  cfg.training = tiny_training();
  auto teacher = nn::build_mini_two_stream<float>(temporal_net_config(tiny_data(), cfg.training));
  teacher.init_he(1);
  const auto runs = run_temperature_matrix(tiny_data(), cfg, teacher, {{1.0, {}}, {2.0, {}}, {3.0, 1.0}});
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].w == 1.0);
  CHECK(runs[1].w == 4.0);
  CHECK(runs[2].temperature == 3.0);
  CHECK(runs[2].w == 1.0);
}
