#include "mvcnn/motion/mv_maps.hpp"

#include <algorithm>
#include <cmath>

#include "mvcnn/core/pgm.hpp"

namespace mvcnn::motion {

std::vector<MotionField> fill_iframe_gaps(const std::vector<MotionField>& fields) {
  std::vector<MotionField> out;
  out.reserve(fields.size());
  const MotionField* last_p = nullptr;
  for (const auto& f : fields) {
    if (f.frame_type() == FrameType::kP && f.has_vectors()) {
      out.push_back(f);
      last_p = &f;
    } else if (last_p != nullptr) {
      out.push_back(last_p->with_type(FrameType::kP));
    } else {
      out.push_back(MotionField::zeros(f.blocks_x(), f.blocks_y(), f.block_size()));
    }
  }
  return out;
}

FlowField rasterize(const MotionField& field, int out_w, int out_h, bool rescale) {
  require(out_w > 0 && out_h > 0, ErrorCode::kInvalidArgument, "rasterize output dimensions must be positive");
  require(field.has_vectors(), ErrorCode::kInvalidArgument, "rasterize needs a gap-filled field");
  FlowField map(out_w, out_h);
  const int src_w = field.width(), src_h = field.height();
  const float sx = rescale ? static_cast<float>(out_w) / src_w : 1.0f;
  const float sy = rescale ? static_cast<float>(out_h) / src_h : 1.0f;
  for (int y = 0; y < out_h; ++y) {
    const int by = static_cast<int>(static_cast<long long>(y) * src_h / out_h) / field.block_size();
    for (int x = 0; x < out_w; ++x) {
      const int bx = static_cast<int>(static_cast<long long>(x) * src_w / out_w) / field.block_size();
      const auto& mv = field.at(bx, by);
      map.u_at(x, y) = static_cast<float>(mv.dx) * sx;
      map.v_at(x, y) = static_cast<float>(mv.dy) * sy;
    }
  }
  return map;
}

MotionField block_average(const FlowField& map, int block_size) {
  require(block_size > 0 && map.width % block_size == 0 && map.height % block_size == 0,
          ErrorCode::kInvalidArgument, "map dimensions must be multiples of the block size");
  auto field = MotionField::zeros(map.width / block_size, map.height / block_size, block_size);
  const double area = static_cast<double>(block_size) * block_size;
  for (int by = 0; by < field.blocks_y(); ++by)
    for (int bx = 0; bx < field.blocks_x(); ++bx) {
      double su = 0.0, sv = 0.0;
      for (int y = by * block_size; y < (by + 1) * block_size; ++y)
        for (int x = bx * block_size; x < (bx + 1) * block_size; ++x) {
          su += map.u_at(x, y);
          sv += map.v_at(x, y);
        }
      field.at(bx, by) = {static_cast<int>(std::lround(su / area)), static_cast<int>(std::lround(sv / area))};
    }
  return field;
}

nn::Tensor<float> stack_inputs(const std::vector<FlowField>& maps, int t0, int stack_length, float scale) {
  require(stack_length > 0 && t0 >= 0, ErrorCode::kInvalidArgument, "invalid stack window");
  if (static_cast<std::size_t>(t0) + static_cast<std::size_t>(stack_length) > maps.size())
    fail(ErrorCode::kOutOfRange, "stack window [" + std::to_string(t0) + ", " + std::to_string(t0 + stack_length) +
                                     ") exceeds " + std::to_string(maps.size()) + " frames");
  const int w = maps[static_cast<std::size_t>(t0)].width;
  const int h = maps[static_cast<std::size_t>(t0)].height;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  nn::Tensor<float> out({2 * stack_length, h, w});
  for (int t = 0; t < stack_length; ++t) {
    const auto& m = maps[static_cast<std::size_t>(t0 + t)];
    require(m.width == w && m.height == h, ErrorCode::kShapeMismatch, "stacked maps differ in size");
    float* dx = out.data() + (2 * static_cast<std::size_t>(t)) * plane;
    float* dy = dx + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      dx[i] = m.u[i] * scale;
      dy[i] = m.v[i] * scale;
    }
  }
  return out;
}

void export_motion_pgm(const MotionField& field, const std::filesystem::path& dx_path,
                       const std::filesystem::path& dy_path) {
  require(field.has_vectors(), ErrorCode::kInvalidArgument, "cannot export an empty (I-frame) field");
  std::vector<std::uint8_t> px(field.vectors().size()), py(field.vectors().size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::clamp(field.vectors()[i].dx + 128, 0, 255));
    py[i] = static_cast<std::uint8_t>(std::clamp(field.vectors()[i].dy + 128, 0, 255));
  }
  write_pgm(dx_path, field.blocks_x(), field.blocks_y(), px);
  write_pgm(dy_path, field.blocks_x(), field.blocks_y(), py);
}

}  // namespace mvcnn::motion
