#include "mvcnn/cli/viz.hpp"

#include <algorithm>
#include <cmath>

#include "mvcnn/core/pgm.hpp"

namespace mvcnn::cli {

FilterMosaic filter_mosaic(const nn::Network<float>& net, const std::string& layer, int zoom) {
  require(zoom >= 1, ErrorCode::kInvalidArgument, "zoom must be at least 1");
  const auto& layers = net.layers();
  const auto it = std::find_if(layers.begin(), layers.end(), [&](const nn::LayerSpec& l) { return l.name == layer; });
  if (it == layers.end()) fail(ErrorCode::kInvalidArgument, "network has no layer named '" + layer + "'");
  const int index = static_cast<int>(it - layers.begin());
  if (it->kind != nn::LayerKind::kConv)
    fail(ErrorCode::kInvalidArgument,
         "layer '" + layer + "' is " + nn::to_string(it->kind) + ", not convolutional", index);

  const int out_c = it->out_channels, in_c = it->in_channels, k = it->kernel;
  const bool paired = in_c % 2 == 0;
  const int across = paired ? 2 : in_c;      // kernels per tile row
  const int down = paired ? in_c / 2 : 1;    // kernel rows per tile
  const int inner = 1;                       // spacing between kernels inside a tile

  FilterMosaic m;
  auto& L = m.layout;
  L.tiles = out_c;
  L.zoom = zoom;
  L.cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(out_c))));
  L.rows = (out_c + L.cols - 1) / L.cols;
  L.tile_width = across * k * zoom + (across - 1) * inner;
  L.tile_height = down * k * zoom + (down - 1) * inner;
  const int width = L.gap + L.cols * (L.tile_width + L.gap);
  const int height = L.gap + L.rows * (L.tile_height + L.gap);
  m.image = Frame(width, height, 0);

  const auto& weights = net.layer_params(index).at(0);
  const std::size_t per_filter = static_cast<std::size_t>(in_c) * k * k;
  for (int f = 0; f < out_c; ++f) {
    const float* w = weights.data() + static_cast<std::size_t>(f) * per_filter;
    const auto [lo, hi] = std::minmax_element(w, w + per_filter);
    const float range = *hi - *lo;
    for (int ch = 0; ch < in_c; ++ch) {
      const int gx = paired ? ch % 2 : ch;
      const int gy = paired ? ch / 2 : 0;
      const int ox = L.tile_x(f) + gx * (k * zoom + inner);
      const int oy = L.tile_y(f) + gy * (k * zoom + inner);
      for (int y = 0; y < k; ++y) {
        for (int x = 0; x < k; ++x) {
          const float v = w[(static_cast<std::size_t>(ch) * k + y) * k + x];
          const auto px = range > 0.0f
                              ? static_cast<std::uint8_t>(std::lround(255.0f * (v - *lo) / range))
                              : std::uint8_t{128};
          for (int zy = 0; zy < zoom; ++zy)
            for (int zx = 0; zx < zoom; ++zx) m.image.at(ox + x * zoom + zx, oy + y * zoom + zy) = px;
        }
      }
    }
  }
  return m;
}

void write_filter_mosaic(const nn::Network<float>& net, const std::filesystem::path& out, const std::string& layer,
                         int zoom) {
  const auto m = filter_mosaic(net, layer, zoom);
  write_pgm(out, m.image.width(), m.image.height(), m.image.luma());
}

}  // namespace mvcnn::cli
