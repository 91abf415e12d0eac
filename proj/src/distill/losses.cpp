#include "mvcnn/distill/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mvcnn/nn/loss.hpp"

namespace mvcnn::distill {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kScratch: return "scratch";
    case Strategy::kTeacherInit: return "ti";
    case Strategy::kSupervisionTransfer: return "st";
    case Strategy::kCombined: return "ti+st";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "scratch") return Strategy::kScratch;
  if (name == "ti") return Strategy::kTeacherInit;
  if (name == "st") return Strategy::kSupervisionTransfer;
  if (name == "ti+st" || name == "st+ti") return Strategy::kCombined;
  fail(ErrorCode::kInvalidArgument, "unknown strategy '" + name + "' (expected scratch|ti|st|ti+st)");
}

bool uses_teacher_init(Strategy s) { return s == Strategy::kTeacherInit || s == Strategy::kCombined; }
bool uses_supervision(Strategy s) { return s == Strategy::kSupervisionTransfer || s == Strategy::kCombined; }

void DistillConfig::validate() const {
  require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::kInvalidArgument, "temperature must be > 0");
  require(w() >= 0.0 && std::isfinite(w()), ErrorCode::kInvalidArgument, "soft-target weight must be >= 0");
}

template <typename T>
std::vector<T> soften(std::span<const T> logits, double temperature) {
  if (!(temperature > 0.0)) fail(ErrorCode::kInvalidArgument, "temperature must be > 0");
  if (temperature == 1.0) return nn::softmax<T>(logits);
  std::vector<T> scaled(logits.size());
  std::transform(logits.begin(), logits.end(), scaled.begin(),
                 [&](T z) { return static_cast<T>(z / static_cast<T>(temperature)); });
  return nn::softmax<T>(scaled);
}

template <typename T>
T loss_tsl(std::span<const T> p_teacher, std::span<const T> p_student) {
  if (p_teacher.size() != p_student.size() || p_teacher.empty())
    fail(ErrorCode::kShapeMismatch, "teacher and student distributions differ in dimension");
  T loss = T(0);
  for (std::size_t i = 0; i < p_teacher.size(); ++i)
    loss -= p_teacher[i] * std::log(std::max(p_student[i], static_cast<T>(kProbFloor)));
  return loss;
}

template <typename T>
T loss_gt(std::span<const T> student_probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= student_probs.size())
    fail(ErrorCode::kOutOfRange,
         "label " + std::to_string(label) + " outside [0," + std::to_string(student_probs.size()) + ")");
  return -std::log(std::max(student_probs[static_cast<std::size_t>(label)], static_cast<T>(kProbFloor)));
}

template <typename T>
CombinedLoss<T> loss_combined(std::span<const T> teacher_logits, std::span<const T> student_logits, int label,
                              const DistillConfig& cfg) {
  cfg.validate();
  if (teacher_logits.size() != student_logits.size())
    fail(ErrorCode::kShapeMismatch, "teacher and student logits differ in dimension");
  const auto p_teacher = soften(teacher_logits, cfg.temperature);
  const auto p_student_soft = soften(student_logits, cfg.temperature);
  const auto p_student = nn::softmax<T>(student_logits);
  CombinedLoss<T> out;
  auto& b = out.breakdown;
  b.w_used = cfg.w();
  b.l_tsl = static_cast<double>(loss_tsl<T>(p_teacher, p_student_soft));
  b.l_gt = static_cast<double>(loss_gt<T>(p_student, label));
  b.total = b.l_tsl + b.w_used * b.l_gt;
  const T inv_t = static_cast<T>(1.0 / cfg.temperature);
  const T w = static_cast<T>(b.w_used);
  out.student_grad.resize(student_logits.size());
  for (std::size_t i = 0; i < student_logits.size(); ++i) {
    const T onehot = static_cast<int>(i) == label ? T(1) : T(0);
    out.student_grad[i] = (p_student_soft[i] - p_teacher[i]) * inv_t + w * (p_student[i] - onehot);
  }
  out.teacher_grad.assign(teacher_logits.size(), T(0));
  return out;
}

template <typename T>
BatchLoss<T> batch_loss(const nn::Tensor<T>* teacher_logits, const nn::Tensor<T>& student_logits,
                        std::span<const int> labels, const DistillConfig& cfg) {
  require(student_logits.rank() == 2, ErrorCode::kShapeMismatch, "student logits must be [N,k]");
  const int n = student_logits.dim(0), k = student_logits.dim(1);
  require(static_cast<int>(labels.size()) == n, ErrorCode::kShapeMismatch, "label count != batch size");
  if (teacher_logits != nullptr && teacher_logits->shape() != student_logits.shape())
    fail(ErrorCode::kShapeMismatch, "teacher logits " + nn::shape_string(teacher_logits->shape()) +
                                        " do not match student logits " + nn::shape_string(student_logits.shape()));
  BatchLoss<T> out;
  out.grad = nn::Tensor<T>(student_logits.shape());
  const T inv_n = T(1) / static_cast<T>(n);
  for (int r = 0; r < n; ++r) {
    const auto off = static_cast<std::size_t>(r) * k;
    const auto s = student_logits.values().subspan(off, static_cast<std::size_t>(k));
    const int label = labels[static_cast<std::size_t>(r)];
    std::vector<T> g;
    LossBreakdown b;
    if (teacher_logits != nullptr) {
      auto c = loss_combined<T>(teacher_logits->values().subspan(off, static_cast<std::size_t>(k)), s, label, cfg);
      b = c.breakdown;
      g = std::move(c.student_grad);
    } else {
      const auto p = nn::softmax<T>(s);
      b.l_gt = static_cast<double>(loss_gt<T>(p, label));
      b.total = b.l_gt;
      g = p;
      g[static_cast<std::size_t>(label)] -= T(1);
    }
    out.mean.l_tsl += b.l_tsl / n;
    out.mean.l_gt += b.l_gt / n;
    out.mean.total += b.total / n;
    out.mean.w_used = b.w_used;
    for (int c = 0; c < k; ++c) out.grad[off + static_cast<std::size_t>(c)] = g[static_cast<std::size_t>(c)] * inv_n;
    if (nn::argmax<T>(s) == label) ++out.correct;
  }
  return out;
}

#define MVCNN_INSTANTIATE(T)                                                                                   \
  template std::vector<T> soften(std::span<const T>, double);                                                 \
  template T loss_tsl(std::span<const T>, std::span<const T>);                                                 \
  template T loss_gt(std::span<const T>, int);                                                                 \
  template CombinedLoss<T> loss_combined(std::span<const T>, std::span<const T>, int, const DistillConfig&);   \
  template BatchLoss<T> batch_loss(const nn::Tensor<T>*, const nn::Tensor<T>&, std::span<const int>,           \
                                   const DistillConfig&);

MVCNN_INSTANTIATE(float)
MVCNN_INSTANTIATE(double)
#undef MVCNN_INSTANTIATE

}  // namespace mvcnn::distill
