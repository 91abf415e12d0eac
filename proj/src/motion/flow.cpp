#include "mvcnn/motion/flow.hpp"

#include <algorithm>
#include <cmath>

namespace mvcnn::motion {

namespace {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> px;

  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_, 0.0f) {}
  float& at(int x, int y) { return px[static_cast<std::size_t>(y) * w + x]; }
  float at(int x, int y) const { return px[static_cast<std::size_t>(y) * w + x]; }
  float clamped(int x, int y) const { return at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); }

  float bilinear(float x, float y) const {
    x = std::clamp(x, 0.0f, static_cast<float>(w - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float fx = x - x0, fy = y - y0;
    const float top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    const float bot = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    return top + fy * (bot - top);
  }
};

Plane to_plane(const Frame& f) {
  Plane p(f.width(), f.height());
  std::transform(f.luma().begin(), f.luma().end(), p.px.begin(), [](std::uint8_t v) { return static_cast<float>(v); });
  return p;
}

// [1 4 6 4 1]/16 blur then 2x decimation.
Plane pyr_down(const Plane& src) {
  static constexpr float k[5] = {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16};
  Plane tmp(src.w, src.h);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      float s = 0.0f;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * src.clamped(x + i, y);
      tmp.at(x, y) = s;
    }
  Plane out((src.w + 1) / 2, (src.h + 1) / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      float s = 0.0f;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.clamped(2 * x, 2 * y + i);
      out.at(x, y) = s;
    }
  return out;
}

// Box sum over a (2r+1)^2 window with clamped borders, via an integral image.
class BoxSum {
 public:
  BoxSum(int w, int h, int r) : w_(w), h_(h), r_(r), integral_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {}

  void apply(const std::vector<float>& in, std::vector<float>& out) {
    for (int y = 0; y < h_; ++y) {
      double row = 0.0;
      for (int x = 0; x < w_; ++x) {
        row += in[static_cast<std::size_t>(y) * w_ + x];
        I(x + 1, y + 1) = I(x + 1, y) + row;
      }
    }
    out.resize(in.size());
    for (int y = 0; y < h_; ++y) {
      const int y0 = std::max(0, y - r_), y1 = std::min(h_, y + r_ + 1);
      for (int x = 0; x < w_; ++x) {
        const int x0 = std::max(0, x - r_), x1 = std::min(w_, x + r_ + 1);
        out[static_cast<std::size_t>(y) * w_ + x] = static_cast<float>(I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0));
      }
    }
  }

 private:
  double& I(int x, int y) { return integral_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  int w_, h_, r_;
  std::vector<double> integral_;
};

void refine_level(const Plane& prev, const Plane& next, FlowField& flow, const FlowConfig& cfg) {
  const int w = prev.w, h = prev.h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<float> ix(n), iy(n), ixx(n), ixy(n), iyy(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      ix[i] = 0.5f * (prev.clamped(x + 1, y) - prev.clamped(x - 1, y));
      iy[i] = 0.5f * (prev.clamped(x, y + 1) - prev.clamped(x, y - 1));
      ixx[i] = ix[i] * ix[i];
      ixy[i] = ix[i] * iy[i];
      iyy[i] = iy[i] * iy[i];
    }
  BoxSum box(w, h, cfg.window / 2);
  std::vector<float> gxx, gxy, gyy;
  box.apply(ixx, gxx);
  box.apply(ixy, gxy);
  box.apply(iyy, gyy);

  std::vector<float> bx(n), by(n), sbx, sby;
  for (int it = 0; it < cfg.iters_per_level; ++it) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const float warped = next.bilinear(static_cast<float>(x) + flow.u[i], static_cast<float>(y) + flow.v[i]);
        const float it_diff = warped - prev.px[i];
        bx[i] = ix[i] * it_diff;
        by[i] = iy[i] * it_diff;
      }
    box.apply(bx, sbx);
    box.apply(by, sby);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = gxx[i], b = gxy[i], c = gyy[i];
      const double tr = a + c;
      const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
      const double min_eig = 0.5 * tr - disc;
      const double det = a * c - b * b;
      if (!(min_eig > cfg.min_eigenvalue) || !(det > 0.0)) continue;
      const double du = -(c * sbx[i] - b * sby[i]) / det;
      const double dv = -(a * sby[i] - b * sbx[i]) / det;
      if (!std::isfinite(du) || !std::isfinite(dv)) continue;
      flow.u[i] += static_cast<float>(du);
      flow.v[i] += static_cast<float>(dv);
    }
  }
}

FlowField upsample(const FlowField& coarse, int w, int h) {
  FlowField out(w, h);
  const float sx = static_cast<float>(coarse.width) / w;
  const float sy = static_cast<float>(coarse.height) / h;
  Plane pu(coarse.width, coarse.height), pv(coarse.width, coarse.height);
  pu.px = coarse.u;
  pv.px = coarse.v;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float cx = (x + 0.5f) * sx - 0.5f;
      const float cy = (y + 0.5f) * sy - 0.5f;
      out.u_at(x, y) = pu.bilinear(cx, cy) / sx;
      out.v_at(x, y) = pv.bilinear(cx, cy) / sy;
    }
  return out;
}

}  // namespace

FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg) {
  require(prev.width() == next.width() && prev.height() == next.height(), ErrorCode::kShapeMismatch,
          "flow frames must have equal size");
  require(cfg.levels >= 1 && cfg.window >= 3 && cfg.window % 2 == 1 && cfg.iters_per_level >= 1,
          ErrorCode::kInvalidArgument, "invalid flow configuration");
  const int min_dim = (1 << cfg.levels) * cfg.window;
  if (prev.width() < min_dim || prev.height() < min_dim)
    fail(ErrorCode::kInvalidArgument, "frames must be at least " + std::to_string(min_dim) + " pixels per side for " +
                                          std::to_string(cfg.levels) + " pyramid levels");

  std::vector<Plane> pyr_prev{to_plane(prev)}, pyr_next{to_plane(next)};
  for (int l = 1; l < cfg.levels; ++l) {
    pyr_prev.push_back(pyr_down(pyr_prev.back()));
    pyr_next.push_back(pyr_down(pyr_next.back()));
  }
  FlowField flow(pyr_prev.back().w, pyr_prev.back().h);
  for (int l = cfg.levels - 1; l >= 0; --l) {
    const auto& p = pyr_prev[static_cast<std::size_t>(l)];
    if (flow.width != p.w || flow.height != p.h) flow = upsample(flow, p.w, p.h);
    refine_level(p, pyr_next[static_cast<std::size_t>(l)], flow, cfg);
  }
  return flow;
}

Bytes serialize_flow(const FlowField& flow) {
  ByteWriter out;
  out.u32(static_cast<std::uint32_t>(flow.width));
  out.u32(static_cast<std::uint32_t>(flow.height));
  for (float v : flow.u) out.f32(v);
  for (float v : flow.v) out.f32(v);
  return std::move(out).take();
}

FlowField deserialize_flow(std::span<const std::uint8_t> data) {
  ByteReader in(data);
  const auto w = in.u32();
  const auto h = in.u32();
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) fail(ErrorCode::kCorrupt, "implausible flow dimensions");
  FlowField flow(static_cast<int>(w), static_cast<int>(h));
  for (auto& v : flow.u) v = in.f32();
  for (auto& v : flow.v) v = in.f32();
  if (in.remaining() != 0) fail(ErrorCode::kCorrupt, "trailing bytes after flow planes");
  return flow;
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) { write_file(path, serialize_flow(flow)); }
FlowField read_flow(const std::filesystem::path& path) { return deserialize_flow(read_file(path)); }

}  // namespace mvcnn::motion
