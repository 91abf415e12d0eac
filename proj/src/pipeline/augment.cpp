#include "mvcnn/pipeline/augment.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mvcnn::pipeline {

void AugmentConfig::validate() const {
  require(!scales.empty(), ErrorCode::kInvalidArgument, "augmentation needs at least one crop scale");
  for (double s : scales)
    require(s > 0.0 && s <= 1.0, ErrorCode::kInvalidArgument, "crop scales must lie in (0, 1]");
  require(flip_probability >= 0.0 && flip_probability <= 1.0, ErrorCode::kInvalidArgument,
          "flip probability must lie in [0, 1]");
  require(out_size > 0, ErrorCode::kInvalidArgument, "output size must be positive");
  for (std::size_t i = 0; i < mirror_labels.size(); ++i) {
    const int m = mirror_labels[i];
    require(m >= 0 && static_cast<std::size_t>(m) < mirror_labels.size() &&
                mirror_labels[static_cast<std::size_t>(m)] == static_cast<int>(i),
            ErrorCode::kInvalidArgument, "mirror label map must be an involution");
  }
}

std::vector<int> mirror_label_map(const std::vector<std::string>& class_names) {
  static const std::pair<std::string, std::string> swaps[] = {{"left", "right"}, {"ccw", "cw"}};
  auto mirrored = [](std::string name) {
    for (const auto& [a, b] : swaps) {
      for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
        const auto pos = name.rfind(from);
        // "cw" also matches inside "ccw"; require a token boundary.
        if (pos != std::string::npos && (pos == 0 || name[pos - 1] == '_') && pos + from.size() == name.size())
          return name.substr(0, pos) + to;
      }
    }
    return name;
  };
  std::vector<int> map(class_names.size());
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    const auto target = mirrored(class_names[i]);
    const auto it = std::find(class_names.begin(), class_names.end(), target);
    map[i] = it == class_names.end() ? static_cast<int>(i) : static_cast<int>(it - class_names.begin());
  }
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[static_cast<std::size_t>(map[i])] != static_cast<int>(i)) map[i] = static_cast<int>(i);
  return map;
}

CropWindow sample_crop(int height, int width, const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const int base = std::min(height, width);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.scales.size() - 1);
  const double scale = cfg.scales[pick(rng)];
  const int side = static_cast<int>(std::lround(scale * base));
  if (side < 1) fail(ErrorCode::kInvalidArgument, "sample too small for the requested crop scale");
  std::uniform_int_distribution<int> px(0, width - side), py(0, height - side);
  CropWindow w;
  w.side = side;
  w.x0 = px(rng);
  w.y0 = py(rng);
  w.flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.flip_probability;
  return w;
}

CropWindow center_crop(int height, int width) {
  const int side = std::min(height, width);
  return {(width - side) / 2, (height - side) / 2, side, false};
}

nn::Tensor<float> apply_crop(const nn::Tensor<float>& sample, const CropWindow& window, int out_size, SampleKind kind) {
  require(sample.rank() == 3, ErrorCode::kShapeMismatch, "augmentation expects a [C,H,W] sample");
  const int c = sample.dim(0), h = sample.dim(1), w = sample.dim(2);
  if (window.side < 1 || window.x0 < 0 || window.y0 < 0 || window.x0 + window.side > w || window.y0 + window.side > h)
    fail(ErrorCode::kInvalidArgument, "crop window of side " + std::to_string(window.side) +
                                          " does not fit a " + std::to_string(h) + "x" + std::to_string(w) + " sample");
  if (kind == SampleKind::kMotionStack && c % 2 != 0)
    fail(ErrorCode::kShapeMismatch, "motion stacks need an even channel count");
  nn::Tensor<float> out({c, out_size, out_size});

  // Source coordinate per output column/row (pixel-center alignment).
  struct Tap {
    int i0, i1;
    float f;
  };
  auto taps = [&](int origin) {
    std::vector<Tap> t(static_cast<std::size_t>(out_size));
    const double ratio = static_cast<double>(window.side) / out_size;
    for (int o = 0; o < out_size; ++o) {
      double s = (o + 0.5) * ratio - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(window.side - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, window.side - 1);
      t[static_cast<std::size_t>(o)] = {origin + i0, origin + i1, static_cast<float>(s - i0)};
    }
    return t;
  };
  const auto tx = taps(window.x0);
  const auto ty = taps(window.y0);

  for (int ch = 0; ch < c; ++ch) {
    const float* src = sample.data() + static_cast<std::size_t>(ch) * h * w;
    float* dst = out.data() + static_cast<std::size_t>(ch) * out_size * out_size;
    const float sign = (kind == SampleKind::kMotionStack && window.flip && ch % 2 == 0) ? -1.0f : 1.0f;
    for (int oy = 0; oy < out_size; ++oy) {
      const auto& ry = ty[static_cast<std::size_t>(oy)];
      const float* r0 = src + static_cast<std::size_t>(ry.i0) * w;
      const float* r1 = src + static_cast<std::size_t>(ry.i1) * w;
      for (int ox = 0; ox < out_size; ++ox) {
        const auto& rx = tx[static_cast<std::size_t>(ox)];
        float v;
        if (rx.f == 0.0f && ry.f == 0.0f) {
          v = r0[rx.i0];
        } else {
          const float top = r0[rx.i0] + rx.f * (r0[rx.i1] - r0[rx.i0]);
          const float bot = r1[rx.i0] + rx.f * (r1[rx.i1] - r1[rx.i0]);
          v = top + ry.f * (bot - top);
        }
        const int dx = window.flip ? out_size - 1 - ox : ox;
        dst[static_cast<std::size_t>(oy) * out_size + dx] = sign * v;
      }
    }
  }
  return out;
}

nn::Tensor<float> augment_train(const nn::Tensor<float>& sample, const AugmentConfig& cfg, std::uint64_t seed,
                                SampleKind kind) {
  require(sample.rank() == 3, ErrorCode::kShapeMismatch, "augmentation expects a [C,H,W] sample");
  std::mt19937_64 rng(seed);
  const auto window = sample_crop(sample.dim(1), sample.dim(2), cfg, rng);
  return apply_crop(sample, window, cfg.out_size, kind);
}

nn::Tensor<float> augment_test(const nn::Tensor<float>& sample, int out_size, SampleKind kind) {
  require(sample.rank() == 3, ErrorCode::kShapeMismatch, "augmentation expects a [C,H,W] sample");
  return apply_crop(sample, center_crop(sample.dim(1), sample.dim(2)), out_size, kind);
}

}  // namespace mvcnn::pipeline
