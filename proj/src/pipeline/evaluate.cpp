#include "mvcnn/pipeline/evaluate.hpp"

#include <cmath>

#include "mvcnn/nn/loss.hpp"

namespace mvcnn::pipeline {

void FusionWeights::validate() const {
  require(std::isfinite(spatial) && std::isfinite(temporal) && spatial >= 0.0 && temporal >= 0.0,
          ErrorCode::kInvalidArgument, "fusion weights must be finite and non-negative");
  require(spatial + temporal > 0.0, ErrorCode::kInvalidArgument, "fusion weights cannot both be zero");
}

Fused fuse(std::span<const double> spatial, std::span<const double> temporal, const FusionWeights& w) {
  w.validate();
  if (spatial.size() != temporal.size() || spatial.empty())
    fail(ErrorCode::kShapeMismatch, "cannot fuse score vectors of length " + std::to_string(spatial.size()) + " and " +
                                        std::to_string(temporal.size()));
  Fused out;
  out.scores.resize(spatial.size());
  const double norm = w.spatial + w.temporal;
  for (std::size_t k = 0; k < spatial.size(); ++k)
    out.scores[k] = (w.spatial * spatial[k] + w.temporal * temporal[k]) / norm;
  out.predicted = nn::argmax<double>(out.scores);
  return out;
}

std::vector<std::vector<double>> clip_scores(const nn::Network<float>& net, const std::vector<ClipFeatures>& clips,
                                             InputKind kind, int stack, int stride) {
  std::vector<std::vector<double>> scores(clips.size());
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const auto starts = window_starts(clips[c].length(), stack, stride);
    if (starts.empty()) continue;
    std::vector<nn::Tensor<float>> windows;
    for (int t0 : starts) windows.push_back(window_input(clips[c], kind, t0, stack));
    const auto& s = windows.front().shape();
    const std::size_t per = windows.front().size();
    nn::Tensor<float> batch({static_cast<int>(windows.size()), s[0], s[1], s[2]});
    for (std::size_t i = 0; i < windows.size(); ++i)
      std::copy(windows[i].data(), windows[i].data() + per, batch.data() + i * per);
    const auto result = nn::forward(net, batch, nn::Mode::kEval);
    const auto probs = nn::softmax_rows(result.logits);
    const int k = result.logits.dim(1);
    std::vector<double> avg(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < windows.size(); ++i)
      for (int j = 0; j < k; ++j) avg[static_cast<std::size_t>(j)] += probs[i * k + static_cast<std::size_t>(j)];
    for (double& v : avg) v /= static_cast<double>(windows.size());
    scores[c] = std::move(avg);
  }
  return scores;
}

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
                              int num_classes) {
  require(scores.size() == labels.size(), ErrorCode::kShapeMismatch, "one label per scored clip is required");
  require(num_classes > 0, ErrorCode::kInvalidArgument, "class count must be positive");
  EvalReport r;
  r.confusion.assign(static_cast<std::size_t>(num_classes), std::vector<int>(static_cast<std::size_t>(num_classes), 0));
  int correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].empty()) {
      ++r.clips_skipped;
      continue;
    }
    const int y = labels[i];
    if (y < 0 || y >= num_classes) fail(ErrorCode::kOutOfRange, "label out of range", static_cast<int>(i));
    require(static_cast<int>(scores[i].size()) == num_classes, ErrorCode::kShapeMismatch,
            "score vector length differs from class count");
    const int p = nn::argmax<double>(scores[i]);
    ++r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
    correct += p == y;
    ++r.clips_evaluated;
  }
  r.per_class_accuracy.assign(static_cast<std::size_t>(num_classes), 0.0);
  for (int k = 0; k < num_classes; ++k) {
    int total = 0;
    for (int v : r.confusion[static_cast<std::size_t>(k)]) total += v;
    if (total > 0)
      r.per_class_accuracy[static_cast<std::size_t>(k)] =
          static_cast<double>(r.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)]) / total;
  }
  r.overall_accuracy = r.clips_evaluated > 0 ? static_cast<double>(correct) / r.clips_evaluated : 0.0;
  return r;
}

namespace {
std::vector<int> labels_of(const std::vector<ClipFeatures>& clips) {
  std::vector<int> labels;
  for (const auto& c : clips) labels.push_back(c.label);
  return labels;
}
}  // namespace

EvalReport evaluate(const nn::Network<float>& net, const std::vector<ClipFeatures>& clips, InputKind kind, int stack,
                    int stride, int num_classes) {
  return report_from_scores(clip_scores(net, clips, kind, stack, stride), labels_of(clips), num_classes);
}

EvalReport evaluate_two_stream(const nn::Network<float>& spatial, const nn::Network<float>& temporal,
                               InputKind temporal_kind, const std::vector<ClipFeatures>& clips, int stack, int stride,
                               int num_classes, const FusionWeights& weights) {
  weights.validate();
  const auto s = clip_scores(spatial, clips, InputKind::kSpatial, stack, stride);
  const auto t = clip_scores(temporal, clips, temporal_kind, stack, stride);
  std::vector<std::vector<double>> fused(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i)
    if (!s[i].empty()) fused[i] = fuse(s[i], t[i], weights).scores;
  return report_from_scores(fused, labels_of(clips), num_classes);
}

}  // namespace mvcnn::pipeline
