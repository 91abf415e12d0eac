#pragma once

#include <span>
#include <vector>

#include "mvcnn/nn/tensor.hpp"

namespace mvcnn::nn {

// Max-subtracted softmax. Rejects non-finite logits.
template <typename T>
std::vector<T> softmax(std::span<const T> logits);

// Row-wise softmax over [N,k].
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

template <typename T>
struct LossAndGrad {
  T loss = T(0);
  Tensor<T> grad;  // dLoss/dLogits, same shape as logits
};

// Mean cross-entropy of softmax(logits) against integer labels over a batch.
template <typename T>
LossAndGrad<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

template <typename T>
int argmax(std::span<const T> values);

}  // namespace mvcnn::nn
