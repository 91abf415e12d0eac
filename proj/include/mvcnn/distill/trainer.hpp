#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mvcnn/distill/losses.hpp"
#include "mvcnn/nn/network.hpp"
#include "mvcnn/nn/optim.hpp"

namespace mvcnn::distill {

// Copies teacher parameters into a copy of `student`. Architectures must match
// layer for layer; only the first layer's input channel count may differ, in
// which case input channels [0, min) are copied and the rest keep the
// student's own initialization.
nn::Network<float> teacher_init(const nn::Network<float>& teacher, const nn::Network<float>& student);

struct Batch {
  nn::Tensor<float> student_input;
  nn::Tensor<float> teacher_input;  // empty when the strategy needs no teacher
  std::vector<int> labels;
};

// Supplies the batch for a given step. Must be deterministic in `step`.
using BatchSource = std::function<Batch(int step)>;

struct MetricsRow {
  int step = 0;
  double lr = 0.0;
  LossBreakdown loss;
  double train_acc_window = 0.0;
};

struct TrainConfig {
  int steps = 3000;
  std::uint64_t seed = 1;  // dropout stream
  float momentum = 0.9f;
  float weight_decay = 5e-4f;
  int acc_window = 50;  // steps in the running train-accuracy window
};

struct TrainResult {
  nn::Network<float> student;
  std::vector<MetricsRow> log;
};

// scratch:  student as given (caller initializes), L_GT
// ti:       teacher_init, then L_GT
// st:       student as given, L_TSL + w L_GT
// ti+st:    teacher_init, then L_TSL + w L_GT
// The teacher only runs eval-mode forwards and is never modified.
TrainResult train_student(const DistillConfig& cfg, const nn::Network<float>* teacher, nn::Network<float> student,
                          const BatchSource& source, const nn::LrSchedule& schedule, const TrainConfig& train);

// CSV columns: step,lr,l_tsl,l_gt,total,train_acc_window
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& log);

}  // namespace mvcnn::distill
