#include "mvcnn/nn/network.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mvcnn::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

std::string layer_label(const LayerSpec& spec, std::size_t index) {
  return "layer " + std::to_string(index) + " (" + (spec.name.empty() ? to_string(spec.kind) : spec.name) + ")";
}

Shape infer_output(const LayerSpec& spec, const Shape& in, std::size_t index) {
  auto reject = [&](const std::string& why) -> Shape {
    fail(ErrorCode::kShapeMismatch, layer_label(spec, index) + ": " + why + ", input " + shape_string(in),
         static_cast<std::int64_t>(index));
  };
  switch (spec.kind) {
    case LayerKind::kConv: {
      if (in.size() != 3 || in[0] != spec.in_channels)
        return reject("expects " + std::to_string(spec.in_channels) + " input channels");
      if (spec.kernel <= 0 || spec.stride <= 0 || spec.pad < 0 || spec.out_channels <= 0)
        return reject("invalid convolution geometry");
      const int ho = (in[1] + 2 * spec.pad - spec.kernel) / spec.stride + 1;
      const int wo = (in[2] + 2 * spec.pad - spec.kernel) / spec.stride + 1;
      if (in[1] + 2 * spec.pad < spec.kernel || in[2] + 2 * spec.pad < spec.kernel || ho <= 0 || wo <= 0)
        return reject("input smaller than kernel");
      return {spec.out_channels, ho, wo};
    }
    case LayerKind::kMaxPool: {
      if (in.size() != 3) return reject("expects a [C,H,W] input");
      if (spec.kernel <= 0 || spec.stride <= 0) return reject("invalid pooling geometry");
      if (in[1] < spec.kernel || in[2] < spec.kernel) return reject("input smaller than pooling window");
      return {in[0], (in[1] - spec.kernel) / spec.stride + 1, (in[2] - spec.kernel) / spec.stride + 1};
    }
    case LayerKind::kRelu:
      return in;
    case LayerKind::kDropout:
      if (!(spec.dropout >= 0.0f && spec.dropout < 1.0f)) return reject("dropout probability must be in [0,1)");
      return in;
    case LayerKind::kPrelu:
      if (in.empty() || in[0] != spec.in_channels)
        return reject("expects " + std::to_string(spec.in_channels) + " channels");
      return in;
    case LayerKind::kLinear:
      if (static_cast<int>(shape_size(in)) != spec.in_channels)
        return reject("expects " + std::to_string(spec.in_channels) + " input features");
      if (spec.out_channels <= 0) return reject("invalid output width");
      return {spec.out_channels};
  }
  return reject("unknown layer kind");
}

// Output columns [lo, hi) whose input column for kernel offset kj lies inside [0, w).
std::pair<int, int> valid_range(const LayerSpec& s, int kj, int w, int wo) {
  int lo = 0;
  while (lo < wo && lo * s.stride - s.pad + kj < 0) ++lo;
  int hi = wo;
  while (hi > lo && (hi - 1) * s.stride - s.pad + kj >= w) --hi;
  return {lo, hi};
}

// [C,H,W] -> [C*k*k, Ho*Wo]
template <typename T>
void im2col(const T* x, int c_in, int h, int w, const LayerSpec& s, int ho, int wo, T* col) {
  const int k = s.kernel;
  const std::size_t hw_out = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < c_in; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + (static_cast<std::size_t>(c * k + ki) * k + kj) * hw_out;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.pad + ki;
          T* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * w;
          const auto [lo, hi] = valid_range(s, kj, w, wo);
          std::fill(dst, dst + lo, T(0));
          if (s.stride == 1) {
            std::copy(src + (lo - s.pad + kj), src + (hi - s.pad + kj), dst + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] = src[ox * s.stride - s.pad + kj];
          }
          std::fill(dst + hi, dst + wo, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int c_in, int h, int w, const LayerSpec& s, int ho, int wo, T* dx) {
  const int k = s.kernel;
  const std::size_t hw_out = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < c_in; ++c) {
    T* xc = dx + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + (static_cast<std::size_t>(c * k + ki) * k + kj) * hw_out;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.pad + ki;
          if (iy < 0 || iy >= h) continue;
          const T* srcrow = row + static_cast<std::size_t>(oy) * wo;
          T* dst = xc + static_cast<std::size_t>(iy) * w;
          const auto [lo, hi] = valid_range(s, kj, w, wo);
          for (int ox = lo; ox < hi; ++ox) dst[ox * s.stride - s.pad + kj] += srcrow[ox];
        }
      }
    }
  }
}

// Channel count and per-channel extent of a per-sample shape, for PReLU.
std::pair<int, std::size_t> channel_layout(const Shape& per_sample) {
  const int c = per_sample.at(0);
  return {c, shape_size(per_sample) / static_cast<std::size_t>(c)};
}

}  // namespace

const char* to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kPrelu: return "prelu";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kDropout: return "dropout";
  }
  return "unknown";
}

LayerSpec conv(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad) {
  return {LayerKind::kConv, std::move(name), in_channels, out_channels, kernel, stride, pad, 0.0f};
}
LayerSpec max_pool(std::string name, int kernel, int stride) {
  return {LayerKind::kMaxPool, std::move(name), 0, 0, kernel, stride, 0, 0.0f};
}
LayerSpec relu(std::string name) { return {LayerKind::kRelu, std::move(name)}; }
LayerSpec prelu(std::string name, int channels) {
  return {LayerKind::kPrelu, std::move(name), channels, 0, 0, 1, 0, 0.0f};
}
LayerSpec linear(std::string name, int in_features, int out_features) {
  return {LayerKind::kLinear, std::move(name), in_features, out_features, 0, 1, 0, 0.0f};
}
LayerSpec dropout(std::string name, float p) {
  return {LayerKind::kDropout, std::move(name), 0, 0, 0, 1, 0, p};
}

template <typename T>
Network<T>::Network(Shape input_chw, int num_classes, std::vector<LayerSpec> layers)
    : input_chw_(std::move(input_chw)), num_classes_(num_classes), layers_(std::move(layers)) {
  require(input_chw_.size() == 3 && input_chw_[0] > 0 && input_chw_[1] > 0 && input_chw_[2] > 0,
          ErrorCode::kInvalidArgument, "network input must be a positive [C,H,W] shape");
  require(num_classes_ > 0, ErrorCode::kInvalidArgument, "num_classes must be positive");
  Shape cur = input_chw_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    cur = infer_output(spec, cur, i);
    out_shapes_.push_back(cur);
    std::vector<Tensor<T>> p;
    switch (spec.kind) {
      case LayerKind::kConv:
        p.emplace_back(Shape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
        p.emplace_back(Shape{spec.out_channels});
        break;
      case LayerKind::kLinear:
        p.emplace_back(Shape{spec.out_channels, spec.in_channels});
        p.emplace_back(Shape{spec.out_channels});
        break;
      case LayerKind::kPrelu:
        p.emplace_back(Shape{spec.in_channels}, T(0.25));
        break;
      default:
        break;
    }
    params_.push_back(std::move(p));
  }
  if (cur != Shape{num_classes_})
    fail(ErrorCode::kShapeMismatch,
         "network output " + shape_string(cur) + " does not match num_classes " + std::to_string(num_classes_));
}

template <typename T>
void Network<T>::init_he(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    auto& p = params_[i];
    if (spec.kind == LayerKind::kConv || spec.kind == LayerKind::kLinear) {
      const double fan_in = spec.kind == LayerKind::kConv
                                ? static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel
                                : static_cast<double>(spec.in_channels);
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : p[0].values()) v = static_cast<T>(normal(rng));
      std::fill(p[1].values().begin(), p[1].values().end(), T(0));
    } else if (spec.kind == LayerKind::kPrelu) {
      std::fill(p[0].values().begin(), p[0].values().end(), T(0.25));
    }
  }
  touch();
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  touch();
  std::vector<Tensor<T>*> out;
  for (auto& layer : params_)
    for (auto& t : layer) out.push_back(&t);
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  std::vector<const Tensor<T>*> out;
  for (const auto& layer : params_)
    for (const auto& t : layer) out.push_back(&t);
  return out;
}

template <typename T>
std::vector<ParamInfo> Network<T>::parameter_info() const {
  std::vector<ParamInfo> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    const int li = static_cast<int>(i);
    switch (spec.kind) {
      case LayerKind::kConv:
      case LayerKind::kLinear:
        out.push_back({li, spec.name + ".weight", true});
        out.push_back({li, spec.name + ".bias", false});
        break;
      case LayerKind::kPrelu:
        out.push_back({li, spec.name + ".slope", false});
        break;
      default:
        break;
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>>& Network<T>::layer_params(int layer) {
  touch();
  return params_.at(static_cast<std::size_t>(layer));
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : params_)
    for (const auto& t : layer) n += t.size();
  return n;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out(input_chw_, num_classes_, layers_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (std::size_t j = 0; j < params_[i].size(); ++j) {
      const auto src = params_[i][j].values();
      auto dst = out.params_[i][j].values();
      std::transform(src.begin(), src.end(), dst.begin(), [](T v) { return static_cast<U>(v); });
    }
  }
  return out;
}

template <typename T>
bool Network<T>::same_parameters(const Network& other) const {
  return input_chw_ == other.input_chw_ && num_classes_ == other.num_classes_ && layers_ == other.layers_ &&
         params_ == other.params_;
}

template <typename T>
ForwardResult<T> forward(const Network<T>& net, const Tensor<T>& input, Mode mode, std::uint64_t rng_seed) {
  const auto& in_shape = input.shape();
  if (in_shape.size() != 4 || Shape(in_shape.begin() + 1, in_shape.end()) != net.input_shape()) {
    const std::string first = net.layers().empty() ? "output" : layer_label(net.layers().front(), 0);
    fail(ErrorCode::kShapeMismatch,
         first + ": expected input [N]" + shape_string(net.input_shape()) + ", got " + shape_string(in_shape), 0);
  }
  const int n = in_shape[0];
  ForwardResult<T> result;
  auto& cache = result.cache;
  cache.owner = &net;
  cache.version = net.version();
  cache.mode = mode;
  const std::size_t nl = net.layers().size();
  cache.inputs.reserve(nl);
  cache.dropout_masks.resize(nl);
  cache.pool_argmax.resize(nl);

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Tensor<T> x = input;
  Shape x_sample(in_shape.begin() + 1, in_shape.end());
  std::vector<T> col;

  for (std::size_t li = 0; li < nl; ++li) {
    const auto& spec = net.layers()[li];
    const auto& params = net.layer_params(static_cast<int>(li));
    const Shape& y_sample = net.output_shapes()[li];
    Shape y_shape{n};
    y_shape.insert(y_shape.end(), y_sample.begin(), y_sample.end());
    const std::size_t in_per = shape_size(x_sample);
    const std::size_t out_per = shape_size(y_sample);

    Tensor<T> y;
    switch (spec.kind) {
      case LayerKind::kConv: {
        y = Tensor<T>(y_shape);
        const int c = x_sample[0], h = x_sample[1], w = x_sample[2];
        const int ho = y_sample[1], wo = y_sample[2];
        const int ckk = c * spec.kernel * spec.kernel;
        const int hw = ho * wo;
        col.resize(static_cast<std::size_t>(ckk) * hw);
        ConstMatMap<T> weight(params[0].data(), spec.out_channels, ckk);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(params[1].data(), spec.out_channels);
        for (int b = 0; b < n; ++b) {
          im2col(x.data() + b * in_per, c, h, w, spec, ho, wo, col.data());
          ConstMatMap<T> colm(col.data(), ckk, hw);
          MatMap<T> out(y.data() + b * out_per, spec.out_channels, hw);
          out.noalias() = weight * colm;
          out.colwise() += bias;
        }
        break;
      }
      case LayerKind::kMaxPool: {
        y = Tensor<T>(y_shape);
        const int c = x_sample[0], h = x_sample[1], w = x_sample[2];
        const int ho = y_sample[1], wo = y_sample[2];
        auto& arg = cache.pool_argmax[li];
        arg.resize(y.size());
        for (int b = 0; b < n; ++b) {
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t base = b * in_per + static_cast<std::size_t>(ch) * h * w;
            for (int oy = 0; oy < ho; ++oy) {
              for (int ox = 0; ox < wo; ++ox) {
                T best = -std::numeric_limits<T>::infinity();
                std::size_t best_i = base;
                for (int ky = 0; ky < spec.kernel; ++ky) {
                  for (int kx = 0; kx < spec.kernel; ++kx) {
                    const std::size_t idx =
                        base + static_cast<std::size_t>(oy * spec.stride + ky) * w + (ox * spec.stride + kx);
                    if (x[idx] > best) {
                      best = x[idx];
                      best_i = idx;
                    }
                  }
                }
                const std::size_t o = b * out_per + (static_cast<std::size_t>(ch) * ho + oy) * wo + ox;
                y[o] = best;
                arg[o] = static_cast<std::uint32_t>(best_i);
              }
            }
          }
        }
        break;
      }
      case LayerKind::kRelu: {
        y = Tensor<T>(y_shape);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
        break;
      }
      case LayerKind::kPrelu: {
        y = Tensor<T>(y_shape);
        const auto [channels, extent] = channel_layout(x_sample);
        const auto slopes = params[0].values();
        for (int b = 0; b < n; ++b) {
          for (int ch = 0; ch < channels; ++ch) {
            const std::size_t base = b * in_per + static_cast<std::size_t>(ch) * extent;
            const T a = slopes[static_cast<std::size_t>(ch)];
            for (std::size_t i = base; i < base + extent; ++i) y[i] = x[i] > T(0) ? x[i] : a * x[i];
          }
        }
        break;
      }
      case LayerKind::kDropout: {
        if (mode == Mode::kEval) {
          y = x.reshaped(y_shape);
          break;
        }
        y = Tensor<T>(y_shape);
        auto& mask = cache.dropout_masks[li];
        mask.resize(x.size());
        const double p = spec.dropout;
        const T keep_scale = T(1) / static_cast<T>(1.0 - p);
        for (std::size_t i = 0; i < x.size(); ++i) {
          const bool keep = p == 0.0 || uniform(rng) >= p;
          mask[i] = keep ? keep_scale : T(0);
          y[i] = x[i] * mask[i];
        }
        break;
      }
      case LayerKind::kLinear: {
        y = Tensor<T>(y_shape);
        ConstMatMap<T> xm(x.data(), n, spec.in_channels);
        ConstMatMap<T> weight(params[0].data(), spec.out_channels, spec.in_channels);
        Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(params[1].data(), spec.out_channels);
        MatMap<T> ym(y.data(), n, spec.out_channels);
        ym.noalias() = xm * weight.transpose();
        ym.rowwise() += bias;
        break;
      }
    }
    cache.inputs.push_back(std::move(x));
    x = std::move(y);
    x_sample = y_sample;
  }
  result.logits = std::move(x);
  return result;
}

template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& loss_grad) {
  return backward(net, cache, loss_grad, static_cast<Tensor<T>*>(nullptr));
}

template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& loss_grad,
                      Tensor<T>* input_grad) {
  if (cache.owner != &net || cache.version != net.version() || cache.inputs.size() != net.layers().size())
    fail(ErrorCode::kStaleCache, "forward cache does not belong to the current network parameters");
  const int n = cache.inputs.empty() ? loss_grad.dim(0) : cache.inputs.front().dim(0);
  if (loss_grad.shape() != Shape{n, net.num_classes()})
    fail(ErrorCode::kShapeMismatch, "loss gradient must be [N,num_classes], got " + shape_string(loss_grad.shape()));

  Gradients<T> grads;
  std::vector<std::size_t> first_param(net.layers().size());
  {
    std::size_t k = 0;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      first_param[li] = k;
      for (const auto& t : net.layer_params(static_cast<int>(li))) {
        grads.emplace_back(t.size(), T(0));
        ++k;
      }
    }
  }

  std::vector<T> dy(loss_grad.values().begin(), loss_grad.values().end());
  std::vector<T> col, dcol;
  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const auto& spec = net.layers()[li];
    const auto& params = net.layer_params(static_cast<int>(li));
    const Tensor<T>& x = cache.inputs[li];
    const Shape x_sample(x.shape().begin() + 1, x.shape().end());
    const Shape& y_sample = net.output_shapes()[li];
    const std::size_t in_per = shape_size(x_sample);
    const std::size_t out_per = shape_size(y_sample);
    const bool need_dx = li > 0 || input_grad != nullptr;
    std::vector<T> dx(need_dx ? x.size() : 0, T(0));

    switch (spec.kind) {
      case LayerKind::kConv: {
        const int c = x_sample[0], h = x_sample[1], w = x_sample[2];
        const int ho = y_sample[1], wo = y_sample[2];
        const int ckk = c * spec.kernel * spec.kernel;
        const int hw = ho * wo;
        col.resize(static_cast<std::size_t>(ckk) * hw);
        if (need_dx) dcol.resize(col.size());
        ConstMatMap<T> weight(params[0].data(), spec.out_channels, ckk);
        MatMap<T> dweight(grads[first_param[li]].data(), spec.out_channels, ckk);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dbias(grads[first_param[li] + 1].data(), spec.out_channels);
        for (int b = 0; b < n; ++b) {
          im2col(x.data() + b * in_per, c, h, w, spec, ho, wo, col.data());
          ConstMatMap<T> colm(col.data(), ckk, hw);
          ConstMatMap<T> dym(dy.data() + b * out_per, spec.out_channels, hw);
          dweight.noalias() += dym * colm.transpose();
          // Plain loops: Eigen reductions peel by address, which breaks bitwise reproducibility.
          for (int oc = 0; oc < spec.out_channels; ++oc) {
            const T* row = dy.data() + b * out_per + static_cast<std::size_t>(oc) * hw;
            T acc = T(0);
            for (int i = 0; i < hw; ++i) acc += row[i];
            dbias[oc] += acc;
          }
          if (need_dx) {
            MatMap<T> dcolm(dcol.data(), ckk, hw);
            dcolm.noalias() = weight.transpose() * dym;
            col2im(dcol.data(), c, h, w, spec, ho, wo, dx.data() + b * in_per);
          }
        }
        break;
      }
      case LayerKind::kMaxPool: {
        if (need_dx) {
          const auto& arg = cache.pool_argmax[li];
          for (std::size_t o = 0; o < dy.size(); ++o) dx[arg[o]] += dy[o];
        }
        break;
      }
      case LayerKind::kRelu: {
        if (need_dx)
          for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
        break;
      }
      case LayerKind::kPrelu: {
        const auto [channels, extent] = channel_layout(x_sample);
        const auto slopes = params[0].values();
        auto& dslope = grads[first_param[li]];
        for (int b = 0; b < n; ++b) {
          for (int ch = 0; ch < channels; ++ch) {
            const std::size_t base = b * in_per + static_cast<std::size_t>(ch) * extent;
            const T a = slopes[static_cast<std::size_t>(ch)];
            T acc = T(0);
            for (std::size_t i = base; i < base + extent; ++i) {
              if (x[i] > T(0)) {
                if (need_dx) dx[i] = dy[i];
              } else {
                acc += x[i] * dy[i];
                if (need_dx) dx[i] = a * dy[i];
              }
            }
            dslope[static_cast<std::size_t>(ch)] += acc;
          }
        }
        break;
      }
      case LayerKind::kDropout: {
        if (need_dx) {
          if (cache.mode == Mode::kEval) {
            dx = dy;
          } else {
            const auto& mask = cache.dropout_masks[li];
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
          }
        }
        break;
      }
      case LayerKind::kLinear: {
        ConstMatMap<T> xm(x.data(), n, spec.in_channels);
        ConstMatMap<T> dym(dy.data(), n, spec.out_channels);
        ConstMatMap<T> weight(params[0].data(), spec.out_channels, spec.in_channels);
        MatMap<T> dweight(grads[first_param[li]].data(), spec.out_channels, spec.in_channels);
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbias(grads[first_param[li] + 1].data(), spec.out_channels);
        dweight.noalias() += dym.transpose() * xm;
        for (int b = 0; b < n; ++b)
          for (int o = 0; o < spec.out_channels; ++o) dbias[o] += dy[static_cast<std::size_t>(b) * spec.out_channels + o];
        if (need_dx) {
          MatMap<T> dxm(dx.data(), n, spec.in_channels);
          dxm.noalias() = dym * weight;
        }
        break;
      }
    }
    dy = std::move(dx);
  }
  if (input_grad != nullptr) *input_grad = Tensor<T>(cache.inputs.empty() ? loss_grad.shape() : cache.inputs.front().shape(), std::move(dy));
  return grads;
}

template <typename T>
Network<T> build_mini_two_stream(const TwoStreamConfig& cfg) {
  require(cfg.input_hw >= 32, ErrorCode::kInvalidArgument,
          "two-stream network needs input_hw >= 32, got " + std::to_string(cfg.input_hw));
  require(cfg.in_channels > 0 && cfg.num_classes > 0, ErrorCode::kInvalidArgument,
          "channel and class counts must be positive");
  const bool use_prelu = cfg.activation == Activation::kPrelu;
  auto act = [&](const std::string& name, int channels) {
    return use_prelu ? prelu(name, channels) : relu(name);
  };
  std::vector<LayerSpec> layers{
      conv("conv1", cfg.in_channels, 32, 7, 2, 3), act("act1", 32), max_pool("pool1", 2, 2),
      conv("conv2", 32, 64, 5, 1, 2),              act("act2", 64), max_pool("pool2", 2, 2),
      conv("conv3", 64, 96, 3, 1, 1),              act("act3", 96), max_pool("pool3", 2, 2),
  };
  // Flattened width after the conv trunk.
  int hw = (cfg.input_hw + 6 - 7) / 2 + 1;
  hw /= 2;
  hw /= 2;
  hw /= 2;
  const int flat = 96 * hw * hw;
  layers.push_back(linear("fc6", flat, 256));
  layers.push_back(act("act6", 256));
  layers.push_back(dropout("drop6", cfg.fc_dropout));
  layers.push_back(linear("fc7", 256, cfg.num_classes));
  return Network<T>({cfg.in_channels, cfg.input_hw, cfg.input_hw}, cfg.num_classes, std::move(layers));
}

#define MVCNN_INSTANTIATE(T)                                                                             \
  template class Network<T>;                                                                             \
  template ForwardResult<T> forward(const Network<T>&, const Tensor<T>&, Mode, std::uint64_t);           \
  template Gradients<T> backward(const Network<T>&, const ForwardCache<T>&, const Tensor<T>&);           \
  template Gradients<T> backward(const Network<T>&, const ForwardCache<T>&, const Tensor<T>&, Tensor<T>*); \
  template Network<T> build_mini_two_stream(const TwoStreamConfig&);

MVCNN_INSTANTIATE(float)
MVCNN_INSTANTIATE(double)
#undef MVCNN_INSTANTIATE

template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;
template Network<double> Network<double>::cast<double>() const;

}  // namespace mvcnn::nn
