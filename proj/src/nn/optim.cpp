#include "mvcnn/nn/optim.hpp"

#include <cmath>

namespace mvcnn::nn {

double LrSchedule::rate_at(int step) const {
  double lr = initial;
  for (const auto& [at, rate] : drops) {
    if (step < at) break;
    lr = rate;
  }
  return lr;
}

void LrSchedule::validate() const {
  require(initial > 0.0, ErrorCode::kInvalidArgument, "initial learning rate must be positive");
  int prev = -1;
  for (const auto& [at, rate] : drops) {
    require(at > prev, ErrorCode::kInvalidArgument, "learning-rate steps must be strictly increasing");
    require(rate > 0.0, ErrorCode::kInvalidArgument, "learning rates must be positive");
    prev = at;
  }
}

LrSchedule LrSchedule::step_decay(double initial, int total_steps, std::vector<double> fractions) {
  LrSchedule s;
  s.initial = initial;
  s.stop_step = total_steps;
  double rate = initial;
  for (double f : fractions) {
    rate *= 0.1;
    s.drops.emplace_back(static_cast<int>(std::lround(f * total_steps)), rate);
  }
  s.validate();
  return s;
}

template <typename T>
OptimState<T> make_optim_state(const Network<T>& net, T momentum, T weight_decay) {
  OptimState<T> state;
  state.momentum_coef = momentum;
  state.weight_decay = weight_decay;
  for (const auto* p : net.parameters()) state.momentum.emplace_back(p->size(), T(0));
  return state;
}

template <typename T>
void sgd_step(Network<T>& net, const Gradients<T>& grads, OptimState<T>& state, const LrSchedule& schedule,
              int step) {
  const auto info = net.parameter_info();
  auto params = net.parameters();
  require(grads.size() == params.size() && state.momentum.size() == params.size(), ErrorCode::kShapeMismatch,
          "gradient / optimizer state count does not match network parameters");
  const T lr = static_cast<T>(schedule.rate_at(step));
  const T mu = state.momentum_coef;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->values();
    const auto& g = grads[i];
    auto& v = state.momentum[i];
    require(g.size() == w.size() && v.size() == w.size(), ErrorCode::kShapeMismatch,
            "gradient shape mismatch for " + info[i].name);
    const T lambda = info[i].decay ? state.weight_decay : T(0);
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = mu * v[j] - lr * (g[j] + lambda * w[j]);
      w[j] += v[j];
    }
  }
}

template OptimState<float> make_optim_state(const Network<float>&, float, float);
template OptimState<double> make_optim_state(const Network<double>&, double, double);
template void sgd_step(Network<float>&, const Gradients<float>&, OptimState<float>&, const LrSchedule&, int);
template void sgd_step(Network<double>&, const Gradients<double>&, OptimState<double>&, const LrSchedule&, int);

}  // namespace mvcnn::nn
