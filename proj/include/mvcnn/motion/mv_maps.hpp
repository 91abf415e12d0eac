#pragma once

#include <filesystem>
#include <vector>

#include "mvcnn/motion/flow.hpp"
#include "mvcnn/motion/motion_field.hpp"
#include "mvcnn/nn/tensor.hpp"

namespace mvcnn::motion {

// Replaces every I-tagged field with a copy of the nearest preceding P field;
// fields before the first P field become all-zero. Output is all-P.
std::vector<MotionField> fill_iframe_gaps(const std::vector<MotionField>& fields);

// Piecewise-constant per-pixel map: pixel (x, y) takes the vector of the block
// covering (x * W / out_w, y * H / out_h) in the field's native W x H grid.
// With `rescale` the vectors are multiplied by out_w / W and out_h / H.
FlowField rasterize(const MotionField& field, int out_w, int out_h, bool rescale = false);

// Per-block mean of a per-pixel map over `block_size` tiles.
MotionField block_average(const FlowField& map, int block_size);

// Stacks maps[t0 .. t0+stack_length) into [2*stack_length, H, W] with channel
// order dx_t0, dy_t0, dx_t0+1, ... Values are multiplied by `scale`
// (1 / search_range by convention, giving roughly [-1, 1]).
nn::Tensor<float> stack_inputs(const std::vector<FlowField>& maps, int t0, int stack_length = 10,
                               float scale = 1.0f / 7.0f);

// One PGM per channel, value = clamp(round(d) + 128); block resolution.
void export_motion_pgm(const MotionField& field, const std::filesystem::path& dx_path,
                       const std::filesystem::path& dy_path);

}  // namespace mvcnn::motion
