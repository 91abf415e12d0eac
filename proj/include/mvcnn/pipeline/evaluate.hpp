#pragma once

#include <span>
#include <vector>

#include "mvcnn/nn/network.hpp"
#include "mvcnn/pipeline/features.hpp"

namespace mvcnn::pipeline {

struct FusionWeights {
  double spatial = 1.0;
  double temporal = 2.0;

  void validate() const;
};

struct Fused {
  std::vector<double> scores;
  int predicted = 0;
};

// (w_s * s + w_t * t) / (w_s + w_t); ties in the argmax go to the lower class.
Fused fuse(std::span<const double> spatial, std::span<const double> temporal, const FusionWeights& w);

struct EvalReport {
  std::vector<double> per_class_accuracy;
  double overall_accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  int clips_evaluated = 0;
  int clips_skipped = 0;  // shorter than one window
};

// Softmax scores averaged over the windows of each clip. Skipped clips get an
// empty vector.
std::vector<std::vector<double>> clip_scores(const nn::Network<float>& net, const std::vector<ClipFeatures>& clips,
                                             InputKind kind, int stack, int stride);

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
                              int num_classes);

EvalReport evaluate(const nn::Network<float>& net, const std::vector<ClipFeatures>& clips, InputKind kind, int stack,
                    int stride, int num_classes);

// Window scores are averaged per stream, then fused.
EvalReport evaluate_two_stream(const nn::Network<float>& spatial, const nn::Network<float>& temporal,
                               InputKind temporal_kind, const std::vector<ClipFeatures>& clips, int stack, int stride,
                               int num_classes, const FusionWeights& weights);

}  // namespace mvcnn::pipeline
