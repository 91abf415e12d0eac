#include "mvcnn/videoio/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mvcnn/core/binary_io.hpp"
#include "mvcnn/core/error.hpp"

namespace mvcnn::videoio {

namespace {

constexpr double kPi = std::numbers::pi;

enum class MotionKind { kTranslate, kRotate, kZoom };

struct ClassMotion {
  MotionKind kind;
  double direction;  // radians for translation; +1/-1 for rotate (cw/ccw) and zoom (in/out)
};

// Image coordinates: x right, y down. Clockwise on screen is increasing angle.
const std::array<ClassMotion, 8> kClassMotion{{
    {MotionKind::kTranslate, kPi},
    {MotionKind::kTranslate, 0.0},
    {MotionKind::kTranslate, -kPi / 2},
    {MotionKind::kTranslate, kPi / 2},
    {MotionKind::kRotate, 1.0},
    {MotionKind::kRotate, -1.0},
    {MotionKind::kZoom, 1.0},
    {MotionKind::kZoom, -1.0},
}};

struct Wave {
  double kx, ky, phase, amp;
  double operator()(double x, double y) const { return amp * std::sin(kx * x + ky * y + phase); }
};

std::vector<Wave> random_waves(std::mt19937_64& rng, int count, double min_period, double max_period,
                               double min_amp, double max_amp) {
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi), period(min_period, max_period), amp(min_amp, max_amp),
      phase(0.0, 2 * kPi);
  std::vector<Wave> waves;
  for (int i = 0; i < count; ++i) {
    const double a = angle(rng), k = 2 * kPi / period(rng);
    waves.push_back({k * std::cos(a), k * std::sin(a), phase(rng), amp(rng)});
  }
  return waves;
}

double texture(const std::vector<Wave>& waves, double base, double x, double y) {
  double v = base;
  for (const auto& w : waves) v += w(x, y);
  return v;
}

enum class ShapeKind { kDisc, kSquare, kTriangle, kEllipse };

// Membership in the unit-radius shape, local coordinates already divided by radius.
bool inside(ShapeKind kind, double x, double y) {
  switch (kind) {
    case ShapeKind::kDisc: return x * x + y * y < 1.0;
    case ShapeKind::kSquare: return std::abs(x) < 0.85 && std::abs(y) < 0.85;
    case ShapeKind::kEllipse: return x * x + (y * y) / 0.36 < 1.0;
    case ShapeKind::kTriangle: {
      // Equilateral, circumradius 1, apex up.
      const double s3 = std::sqrt(3.0);
      return y < 0.5 && (s3 * x - y) < 1.0 && (-s3 * x - y) < 1.0;
    }
  }
  return false;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

}  // namespace

const std::vector<std::string>& motionshapes_classes() {
  static const std::vector<std::string> names{"translate_left", "translate_right", "translate_up", "translate_down",
                                              "rotate_cw",      "rotate_ccw",      "zoom_in",      "zoom_out"};
  return names;
}

Clip render_motionshapes_clip(const MotionShapesConfig& cfg, int label, int index) {
  const int res = cfg.resolution;
  const int len = cfg.clip_length;
  const double unit = res / 64.0;
  std::mt19937_64 rng(mix(cfg.seed, static_cast<std::uint64_t>(label) + 1, static_cast<std::uint64_t>(index) + 1));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  // Appearance: identical procedure for every class.
  const auto bg_waves = random_waves(rng, 6, 6.0 * unit, 24.0 * unit, 8.0, 22.0);
  const double bg_base = uniform(90.0, 160.0);
  const auto fg_waves = random_waves(rng, 4, 0.35, 0.9, 10.0, 28.0);  // periods in radius units
  const double fg_base = uniform(50.0, 205.0);
  const auto shape = static_cast<ShapeKind>(std::uniform_int_distribution<int>(0, 3)(rng));
  const double radius_mid = uniform(10.0, 16.0) * unit;
  const double cx_mid = res / 2.0 + uniform(-0.12, 0.12) * res;
  const double cy_mid = res / 2.0 + uniform(-0.12, 0.12) * res;
  const double theta_mid = uniform(0.0, 2 * kPi);
  const double drift_x = uniform(-0.25, 0.25) * unit;
  const double drift_y = uniform(-0.25, 0.25) * unit;

  // Motion: the only class-dependent draw.
  const auto motion = kClassMotion.at(static_cast<std::size_t>(label));
  double vx = drift_x, vy = drift_y, omega = 0.0, zoom_rate = 0.0;
  switch (motion.kind) {
    case MotionKind::kTranslate: {
      const double speed = uniform(0.5, 1.5) * unit;
      const double dir = motion.direction + uniform(-0.35, 0.35);
      vx = speed * std::cos(dir);
      vy = speed * std::sin(dir);
      break;
    }
    case MotionKind::kRotate:
      omega = motion.direction * uniform(3.0, 7.0) * kPi / 180.0;
      break;
    case MotionKind::kZoom:
      zoom_rate = motion.direction * uniform(0.03, 0.06);
      break;
  }

  Clip clip;
  clip.label = label;
  clip.fps_nominal = 25.0;
  clip.clip_id = motionshapes_classes().at(static_cast<std::size_t>(label)) + "_" + std::to_string(index);

  // 2x2 supersampled static background.
  constexpr int kSs = 2;
  const int hi = res * kSs;
  std::vector<double> background(static_cast<std::size_t>(hi) * hi);
  for (int y = 0; y < hi; ++y)
    for (int x = 0; x < hi; ++x) {
      const double px = (x + 0.5) / kSs, py = (y + 0.5) / kSs;
      background[static_cast<std::size_t>(y) * hi + x] = texture(bg_waves, bg_base, px, py);
    }

  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  const double t_mid = (len - 1) / 2.0;
  for (int t = 0; t < len; ++t) {
    const double dt = t - t_mid;
    const double cx = cx_mid + vx * dt, cy = cy_mid + vy * dt;
    const double theta = theta_mid + omega * dt;
    const double radius = radius_mid * std::exp(zoom_rate * dt);
    const double ct = std::cos(theta), st = std::sin(theta);
    std::vector<double> acc(static_cast<std::size_t>(res) * res, 0.0);
    for (int y = 0; y < hi; ++y) {
      const double py = (y + 0.5) / kSs;
      for (int x = 0; x < hi; ++x) {
        const double px = (x + 0.5) / kSs;
        const double rx = px - cx, ry = py - cy;
        double value = background[static_cast<std::size_t>(y) * hi + x];
        if (rx * rx + ry * ry < 1.5 * radius * radius) {
          // Shape-local coordinates in radius units.
          const double lx = (ct * rx + st * ry) / radius;
          const double ly = (-st * rx + ct * ry) / radius;
          if (inside(shape, lx, ly)) value = texture(fg_waves, fg_base, lx, ly);
        }
        acc[static_cast<std::size_t>(y / kSs) * res + x / kSs] += value;
      }
    }
    Frame frame(res, res);
    auto luma = frame.luma();
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const double v = acc[i] / (kSs * kSs) + noise(rng);
      luma[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    frame.fill_neutral_chroma();
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

std::pair<DatasetManifest, std::vector<Clip>> generate_motionshapes(const MotionShapesConfig& cfg) {
  if (cfg.resolution <= 0 || cfg.resolution % 16 != 0)
    fail(ErrorCode::kInvalidArgument, "resolution must be a positive multiple of 16, got " + std::to_string(cfg.resolution));
  if (cfg.clip_length < 16)
    fail(ErrorCode::kInvalidArgument, "clip_length must be >= 16, got " + std::to_string(cfg.clip_length));
  if (cfg.clips_per_class < 1) fail(ErrorCode::kInvalidArgument, "clips_per_class must be >= 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0))
    fail(ErrorCode::kInvalidArgument, "train_fraction must be in (0, 1]");

  DatasetManifest manifest;
  manifest.class_names = motionshapes_classes();
  manifest.seed = cfg.seed;
  manifest.resolution = cfg.resolution;
  manifest.clip_length = cfg.clip_length;
  const int n_train = static_cast<int>(std::lround(cfg.train_fraction * cfg.clips_per_class));

  std::vector<Clip> clips;
  for (int label = 0; label < manifest.num_classes(); ++label) {
    // Split assignment is a seeded permutation per class.
    std::vector<int> order(static_cast<std::size_t>(cfg.clips_per_class));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 split_rng(mix(cfg.seed, 0xA5A5, static_cast<std::uint64_t>(label)));
    std::shuffle(order.begin(), order.end(), split_rng);
    std::vector<Split> split(order.size(), Split::kTest);
    for (int i = 0; i < n_train; ++i) split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Split::kTrain;

    for (int i = 0; i < cfg.clips_per_class; ++i) {
      auto clip = render_motionshapes_clip(cfg, label, i);
      manifest.clips.push_back({clip.clip_id, label, split[static_cast<std::size_t>(i)]});
      clips.push_back(std::move(clip));
    }
  }
  return {std::move(manifest), std::move(clips)};
}

std::vector<std::string> DatasetManifest::ids(Split split) const {
  std::vector<std::string> out;
  for (const auto& c : clips)
    if (c.split == split) out.push_back(c.clip_id);
  return out;
}

void DatasetManifest::validate() const {
  require(!class_names.empty(), ErrorCode::kCorrupt, "manifest has no classes");
  std::set<std::string> seen;
  for (const auto& c : clips) {
    if (!seen.insert(c.clip_id).second) fail(ErrorCode::kCorrupt, "clip id '" + c.clip_id + "' appears twice");
    if (c.label < 0 || c.label >= num_classes())
      fail(ErrorCode::kCorrupt, "clip '" + c.clip_id + "' has label outside [0, " + std::to_string(num_classes()) + ")");
  }
}

std::string DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["resolution"] = resolution;
  j["clip_length"] = clip_length;
  j["class_names"] = class_names;
  nlohmann::ordered_json splits;
  splits["train"] = ids(Split::kTrain);
  splits["test"] = ids(Split::kTest);
  j["splits"] = splits;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : clips) arr.push_back({{"id", c.clip_id}, {"label", c.label}, {"split", split_name(c.split)}});
  j["clips"] = arr;
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.resolution = j.at("resolution").get<int>();
    m.clip_length = j.at("clip_length").get<int>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& c : j.at("clips")) {
      const auto split = c.at("split").get<std::string>();
      if (split != "train" && split != "test") fail(ErrorCode::kCorrupt, "unknown split '" + split + "'");
      m.clips.push_back({c.at("id").get<std::string>(), c.at("label").get<int>(),
                         split == "train" ? Split::kTrain : Split::kTest});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorrupt, std::string("manifest JSON: ") + e.what());
  }
  m.validate();
  return m;
}

void save_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest, const std::vector<Clip>& clips) {
  manifest.validate();
  std::filesystem::create_directories(dir / "clips");
  for (const auto& clip : clips) {
    Bytes raw;
    raw.reserve(static_cast<std::size_t>(clip.length()) * clip.width() * clip.height());
    for (const auto& f : clip.frames) raw.insert(raw.end(), f.luma().begin(), f.luma().end());
    write_file(dir / "clips" / (clip.clip_id + ".raw"), raw);
  }
  const auto json = manifest.to_json();
  write_file(dir / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto bytes = read_file(dir / "manifest.json");
  return DatasetManifest::from_json(std::string(bytes.begin(), bytes.end()));
}

Clip load_clip(const std::filesystem::path& dir, const DatasetManifest& manifest, const ClipEntry& entry) {
  const auto raw = read_file(dir / "clips" / (entry.clip_id + ".raw"));
  const std::size_t plane = static_cast<std::size_t>(manifest.resolution) * manifest.resolution;
  if (raw.size() != plane * static_cast<std::size_t>(manifest.clip_length))
    fail(ErrorCode::kCorrupt, "clip file for '" + entry.clip_id + "' has unexpected size");
  Clip clip;
  clip.clip_id = entry.clip_id;
  clip.label = entry.label;
  for (int t = 0; t < manifest.clip_length; ++t) {
    const auto begin = raw.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(t));
    Frame f(manifest.resolution, manifest.resolution, std::vector<std::uint8_t>(begin, begin + static_cast<std::ptrdiff_t>(plane)));
    f.fill_neutral_chroma();
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

}  // namespace mvcnn::videoio
