#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvcnn/nn/tensor.hpp"

namespace mvcnn::nn {

enum class LayerKind : std::uint8_t {
  kConv = 1,
  kMaxPool = 2,
  kRelu = 3,
  kPrelu = 4,
  kLinear = 5,
  kDropout = 6,
};

const char* to_string(LayerKind kind) noexcept;

// Layer descriptor. Field meaning depends on kind:
//   conv    in_channels, out_channels, kernel, stride, pad
//   maxpool kernel, stride
//   prelu   in_channels (one slope per channel / feature)
//   linear  in_channels = input features, out_channels = outputs
//   dropout dropout = drop probability
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  float dropout = 0.0f;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

LayerSpec conv(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad);
LayerSpec max_pool(std::string name, int kernel, int stride);
LayerSpec relu(std::string name);
LayerSpec prelu(std::string name, int channels);
LayerSpec linear(std::string name, int in_features, int out_features);
LayerSpec dropout(std::string name, float p);

enum class Mode { kTrain, kEval };

struct ParamInfo {
  int layer;
  std::string name;
  bool decay;  // weight decay applies (kernels only)
};

template <typename T>
class Network;

// Per-layer state captured by forward() and consumed by backward().
template <typename T>
struct ForwardCache {
  const Network<T>* owner = nullptr;
  std::uint64_t version = 0;
  Mode mode = Mode::kEval;
  std::vector<Tensor<T>> inputs;
  std::vector<std::vector<T>> dropout_masks;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
};

template <typename T>
struct ForwardResult {
  Tensor<T> logits;
  ForwardCache<T> cache;
};

// Parameter gradients, aligned with Network::parameters().
template <typename T>
using Gradients = std::vector<std::vector<T>>;

// Sequential CNN over [N, C, H, W] inputs producing [N, num_classes] logits.
template <typename T>
class Network {
 public:
  Network() = default;
  // Validates that consecutive layers are shape-compatible and allocates
  // zero-valued parameters.
  Network(Shape input_chw, int num_classes, std::vector<LayerSpec> layers);

  const Shape& input_shape() const noexcept { return input_chw_; }
  int num_classes() const noexcept { return num_classes_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  // Per-sample output shape of each layer.
  const std::vector<Shape>& output_shapes() const noexcept { return out_shapes_; }

  // He fan-in normal init for conv/linear kernels, zero biases, PReLU slopes 0.25.
  void init_he(std::uint64_t seed);

  // Flat parameter list in layer order; parameter_info() is aligned with it.
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  std::vector<ParamInfo> parameter_info() const;
  std::vector<Tensor<T>>& layer_params(int layer);
  const std::vector<Tensor<T>>& layer_params(int layer) const { return params_.at(static_cast<std::size_t>(layer)); }
  std::size_t parameter_count() const;

  // Bumped on every mutable parameter access; caches from older versions are stale.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  template <typename U>
  Network<U> cast() const;

  // Parameter values only; version and cache identity are ignored.
  bool same_parameters(const Network& other) const;

 private:
  template <typename U>
  friend class Network;

  Shape input_chw_;
  int num_classes_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> out_shapes_;
  std::vector<std::vector<Tensor<T>>> params_;
  std::uint64_t version_ = 0;
};

// Deterministic in (parameters, input, mode, seed). Dropout is active only in
// train mode and uses inverted scaling.
template <typename T>
ForwardResult<T> forward(const Network<T>& net, const Tensor<T>& input, Mode mode, std::uint64_t rng_seed = 0);

// Gradients of every parameter given dLoss/dLogits. Rejects caches produced by
// a different network object or an older parameter version.
template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& loss_grad);

// dLoss/dInput is also produced when requested (used by layer gradient checks).
template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& loss_grad,
                      Tensor<T>* input_grad);

enum class Activation { kRelu, kPrelu };

struct TwoStreamConfig {
  int input_hw = 64;
  int in_channels = 20;
  int num_classes = 8;
  Activation activation = Activation::kPrelu;
  float fc_dropout = 0.5f;
};

// conv7x7/2 32 -> pool2 -> conv5x5/1 64 -> pool2 -> conv3x3/1 96 -> pool2
// -> fc 256 -> dropout -> fc num_classes, each conv/fc6 followed by the activation.
template <typename T>
Network<T> build_mini_two_stream(const TwoStreamConfig& cfg);

}  // namespace mvcnn::nn
