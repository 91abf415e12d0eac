#include "mvcnn/distill/trainer.hpp"

#include <deque>
#include <ostream>

namespace mvcnn::distill {

nn::Network<float> teacher_init(const nn::Network<float>& teacher, const nn::Network<float>& student) {
  const auto& tl = teacher.layers();
  const auto& sl = student.layers();
  if (tl.size() != sl.size())
    fail(ErrorCode::kShapeMismatch, "teacher has " + std::to_string(tl.size()) + " layers, student " +
                                        std::to_string(sl.size()));
  for (std::size_t i = 0; i < tl.size(); ++i) {
    auto t = tl[i], s = sl[i];
    t.name = s.name = "";
    if (i == 0 && t.kind == nn::LayerKind::kConv) t.in_channels = s.in_channels;
    if (!(t == s))
      fail(ErrorCode::kShapeMismatch,
           "layer " + std::to_string(i) + " (" + sl[i].name + ") differs between teacher and student",
           static_cast<std::int64_t>(i));
  }
  if (teacher.num_classes() != student.num_classes())
    fail(ErrorCode::kShapeMismatch, "teacher and student class counts differ",
         static_cast<std::int64_t>(tl.size()) - 1);
  const auto& ti = teacher.input_shape();
  const auto& si = student.input_shape();
  if (ti[1] != si[1] || ti[2] != si[2]) fail(ErrorCode::kShapeMismatch, "teacher and student input sizes differ", 0);

  nn::Network<float> out = student;
  for (std::size_t li = 0; li < tl.size(); ++li) {
    const auto& src = teacher.layer_params(static_cast<int>(li));
    auto& dst = out.layer_params(static_cast<int>(li));
    for (std::size_t p = 0; p < src.size(); ++p) {
      if (src[p].shape() == dst[p].shape()) {
        std::copy(src[p].values().begin(), src[p].values().end(), dst[p].values().begin());
        continue;
      }
      // First-layer kernel [O, C, k, k] with differing C: copy channels up to min.
      const int o = src[p].dim(0), ct = src[p].dim(1), cs = dst[p].dim(1);
      const std::size_t kk = static_cast<std::size_t>(src[p].dim(2)) * src[p].dim(3);
      const int c_min = std::min(ct, cs);
      for (int f = 0; f < o; ++f)
        for (int c = 0; c < c_min; ++c) {
          const auto s_off = (static_cast<std::size_t>(f) * ct + c) * kk;
          const auto d_off = (static_cast<std::size_t>(f) * cs + c) * kk;
          std::copy_n(src[p].values().begin() + static_cast<std::ptrdiff_t>(s_off), kk,
                      dst[p].values().begin() + static_cast<std::ptrdiff_t>(d_off));
        }
    }
  }
  return out;
}

TrainResult train_student(const DistillConfig& cfg, const nn::Network<float>* teacher, nn::Network<float> student,
                          const BatchSource& source, const nn::LrSchedule& schedule, const TrainConfig& train) {
  cfg.validate();
  schedule.validate();
  const bool need_teacher = cfg.strategy != Strategy::kScratch;
  if (need_teacher && teacher == nullptr)
    fail(ErrorCode::kInvalidArgument, "strategy " + to_string(cfg.strategy) + " requires a teacher network");
  if (uses_teacher_init(cfg.strategy)) student = teacher_init(*teacher, student);

  TrainResult result;
  auto state = nn::make_optim_state(student, train.momentum, train.weight_decay);
  std::deque<std::pair<int, int>> window;  // (correct, count) per step
  int win_correct = 0, win_count = 0;

  for (int step = 0; step < train.steps; ++step) {
    const Batch batch = source(step);
    const auto fwd = nn::forward(student, batch.student_input, nn::Mode::kTrain,
                                 train.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(step));
    nn::Tensor<float> teacher_logits;
    const bool supervise = uses_supervision(cfg.strategy);
    if (supervise) teacher_logits = nn::forward(*teacher, batch.teacher_input, nn::Mode::kEval).logits;
    const auto loss = batch_loss<float>(supervise ? &teacher_logits : nullptr, fwd.logits, batch.labels, cfg);
    const auto grads = nn::backward(student, fwd.cache, loss.grad);
    nn::sgd_step(student, grads, state, schedule, step);

    window.emplace_back(loss.correct, static_cast<int>(batch.labels.size()));
    win_correct += loss.correct;
    win_count += static_cast<int>(batch.labels.size());
    if (static_cast<int>(window.size()) > train.acc_window) {
      win_correct -= window.front().first;
      win_count -= window.front().second;
      window.pop_front();
    }
    result.log.push_back({step, schedule.rate_at(step), loss.mean,
                          win_count ? static_cast<double>(win_correct) / win_count : 0.0});
  }
  result.student = std::move(student);
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& log) {
  out << "step,lr,l_tsl,l_gt,total,train_acc_window\n";
  for (const auto& r : log)
    out << r.step << ',' << r.lr << ',' << r.loss.l_tsl << ',' << r.loss.l_gt << ',' << r.loss.total << ','
        << r.train_acc_window << '\n';
}

}  // namespace mvcnn::distill
