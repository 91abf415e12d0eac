#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvcnn/nn/tensor.hpp"

namespace mvcnn::distill {

enum class Strategy { kScratch, kTeacherInit, kSupervisionTransfer, kCombined };

// CLI names: scratch | ti | st | ti+st
std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);
bool uses_teacher_init(Strategy s);
bool uses_supervision(Strategy s);

struct DistillConfig {
  double temperature = 2.0;
  std::optional<double> weight;  // unset: temperature^2
  Strategy strategy = Strategy::kCombined;

  double w() const { return weight.value_or(temperature * temperature); }
  void validate() const;
};

struct LossBreakdown {
  double l_tsl = 0.0;
  double l_gt = 0.0;
  double total = 0.0;
  double w_used = 1.0;
};

// Probabilities below this are clamped before taking the log.
inline constexpr double kProbFloor = 1e-12;

// softmax(logits / temperature).
template <typename T>
std::vector<T> soften(std::span<const T> logits, double temperature);

// -sum_i p_teacher(i) * log p_student(i)
template <typename T>
T loss_tsl(std::span<const T> p_teacher, std::span<const T> p_student);

// -log p(label), with p the plain (temperature 1) student softmax.
template <typename T>
T loss_gt(std::span<const T> student_probs, int label);

template <typename T>
struct CombinedLoss {
  LossBreakdown breakdown;
  std::vector<T> student_grad;  // dL / d student logits
  std::vector<T> teacher_grad;  // always zero: the teacher is frozen
};

// L = L_TSL(soften(teacher), soften(student)) + w * L_GT(softmax(student), label).
// The TSL gradient is (p_student_T - p_teacher_T) / temperature and is not rescaled.
template <typename T>
CombinedLoss<T> loss_combined(std::span<const T> teacher_logits, std::span<const T> student_logits, int label,
                              const DistillConfig& cfg);

template <typename T>
struct BatchLoss {
  LossBreakdown mean;  // batch means of each term
  nn::Tensor<T> grad;  // dMeanLoss / dStudentLogits, [N, k]
  int correct = 0;     // argmax(student) == label
};

// Batch form used by training. With no teacher logits the loss is L_GT alone
// (l_tsl = 0, w_used = 1).
template <typename T>
BatchLoss<T> batch_loss(const nn::Tensor<T>* teacher_logits, const nn::Tensor<T>& student_logits,
                        std::span<const int> labels, const DistillConfig& cfg);

}  // namespace mvcnn::distill
