#include "mvcnn/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace mvcnn::nn {

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  require(!logits.empty(), ErrorCode::kInvalidArgument, "softmax of an empty vector");
  for (T v : logits)
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "softmax input contains a non-finite logit");
  const T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  require(logits.rank() == 2, ErrorCode::kShapeMismatch, "softmax_rows expects [N,k]");
  const int n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (int r = 0; r < n; ++r) {
    const auto row = softmax<T>(logits.values().subspan(static_cast<std::size_t>(r) * k, static_cast<std::size_t>(k)));
    std::copy(row.begin(), row.end(), out.values().begin() + static_cast<std::ptrdiff_t>(r) * k);
  }
  return out;
}

template <typename T>
LossAndGrad<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require(logits.rank() == 2, ErrorCode::kShapeMismatch, "cross-entropy expects [N,k] logits");
  const int n = logits.dim(0), k = logits.dim(1);
  require(static_cast<int>(labels.size()) == n, ErrorCode::kShapeMismatch, "label count != batch size");
  LossAndGrad<T> out{T(0), softmax_rows(logits)};
  for (int r = 0; r < n; ++r) {
    const int q = labels[static_cast<std::size_t>(r)];
    if (q < 0 || q >= k) fail(ErrorCode::kOutOfRange, "label " + std::to_string(q) + " outside [0," + std::to_string(k) + ")");
    T* row = out.grad.data() + static_cast<std::size_t>(r) * k;
    out.loss -= std::log(std::max(row[q], T(1e-12)));
    row[q] -= T(1);
    for (int c = 0; c < k; ++c) row[c] /= static_cast<T>(n);
  }
  out.loss /= static_cast<T>(n);
  return out;
}

template <typename T>
int argmax(std::span<const T> values) {
  require(!values.empty(), ErrorCode::kInvalidArgument, "argmax of an empty vector");
  // First maximum wins, so ties go to the lower index.
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

#define MVCNN_INSTANTIATE(T)                                                                 \
  template std::vector<T> softmax(std::span<const T>);                                      \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                         \
  template LossAndGrad<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);     \
  template int argmax(std::span<const T>);

MVCNN_INSTANTIATE(float)
MVCNN_INSTANTIATE(double)
#undef MVCNN_INSTANTIATE

}  // namespace mvcnn::nn
