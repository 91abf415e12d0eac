#pragma once

#include <filesystem>
#include <string>

#include "mvcnn/core/frame.hpp"
#include "mvcnn/nn/network.hpp"

namespace mvcnn::cli {

struct MosaicLayout {
  int tiles = 0;
  int cols = 0;
  int rows = 0;
  int tile_width = 0;   // pixels, excluding the gap
  int tile_height = 0;
  int gap = 1;          // black separator between tiles and around the border
  int zoom = 1;         // pixels per weight

  // Top-left pixel of tile i (row-major).
  int tile_x(int i) const { return gap + (i % cols) * (tile_width + gap); }
  int tile_y(int i) const { return gap + (i / cols) * (tile_height + gap); }
};

struct FilterMosaic {
  Frame image;
  MosaicLayout layout;
};

// One tile per output filter of the named conv layer, row-major. With an even
// input channel count the channels are (dx, dy) pairs: each pair is a row of
// two kernels side by side, pairs stacked downwards. Otherwise all channels
// sit side by side in one row. Each filter is min-max normalized to [0, 255]
// over all its channels; a constant filter renders mid-gray (128).
FilterMosaic filter_mosaic(const nn::Network<float>& net, const std::string& layer = "conv1", int zoom = 4);

void write_filter_mosaic(const nn::Network<float>& net, const std::filesystem::path& out,
                         const std::string& layer = "conv1", int zoom = 4);

}  // namespace mvcnn::cli
