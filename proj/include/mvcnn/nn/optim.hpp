#pragma once

#include <utility>
#include <vector>

#include "mvcnn/nn/network.hpp"

namespace mvcnn::nn {

// Piecewise-constant learning rate. A drop listed at step s applies from s on.
struct LrSchedule {
  double initial = 1e-2;
  std::vector<std::pair<int, double>> drops;
  int stop_step = 0;

  double rate_at(int step) const;
  void validate() const;

  // initial, then x0.1 at each fraction of `total_steps`.
  static LrSchedule step_decay(double initial, int total_steps, std::vector<double> fractions = {0.6, 0.85});
};

template <typename T>
struct OptimState {
  std::vector<std::vector<T>> momentum;
  T momentum_coef = T(0.9);
  T weight_decay = T(5e-4);
};

template <typename T>
OptimState<T> make_optim_state(const Network<T>& net, T momentum = T(0.9), T weight_decay = T(5e-4));

// v <- mu*v - lr*(g + lambda*w); w <- w + v. Decay applies to kernels only.
template <typename T>
void sgd_step(Network<T>& net, const Gradients<T>& grads, OptimState<T>& state, const LrSchedule& schedule,
              int step);

}  // namespace mvcnn::nn
