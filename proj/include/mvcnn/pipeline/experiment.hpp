#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvcnn/distill/trainer.hpp"
#include "mvcnn/pipeline/augment.hpp"
#include "mvcnn/pipeline/evaluate.hpp"
#include "mvcnn/pipeline/features.hpp"

namespace mvcnn::pipeline {

// One training sample: clip index into the training set, window start and the
// seed of its crop/flip draw.
struct SamplePlan {
  int clip = 0;
  int t0 = 0;
  std::uint64_t crop_seed = 0;
};

// Epochs of shuffled clips, one random window per clip per epoch, enough for
// `steps * batch` samples. Clips shorter than one window are left out.
std::vector<SamplePlan> plan_samples(const std::vector<ClipFeatures>& clips, int stack, int steps, int batch,
                                     std::uint64_t seed);

// Batches from `plan`; the teacher input (if any) uses the same window and
// crop as the student input.
distill::BatchSource make_batch_source(const std::vector<ClipFeatures>& clips, std::vector<SamplePlan> plan,
                                       int batch, int stack, InputKind student_kind,
                                       std::optional<InputKind> teacher_kind, const AugmentConfig& augment);

struct StreamTraining {
  int steps = 3000;
  int batch = 4;
  int stack = 10;
  int eval_stride = 4;
  double lr_scratch = 3e-3;   // random init (scratch, st, teacher, spatial)
  double lr_finetune = 1e-3;  // after teacher initialization (ti, ti+st)
  // Distilled runs (st, ti+st) use the above divided by w.
  float fc_dropout = 0.5f;
  AugmentConfig augment;
};

struct TrainedStream {
  nn::Network<float> net;
  std::vector<distill::MetricsRow> log;
  double train_accuracy = 0.0;
  EvalReport test;
};

// Temporal network on stacked flow, L_GT only.
TrainedStream train_teacher(const PreparedData& data, const StreamTraining& cfg, std::uint64_t seed);

// Appearance network on single frames (three replicated luma channels, ReLU).
TrainedStream train_spatial(const PreparedData& data, const StreamTraining& cfg, std::uint64_t seed);

// Temporal network on stacked motion vectors with the given strategy.
TrainedStream train_mv_student(const PreparedData& data, const StreamTraining& cfg,
                               const distill::DistillConfig& distill, const nn::Network<float>* teacher,
                               std::uint64_t seed);

nn::TwoStreamConfig temporal_net_config(const PreparedData& data, const StreamTraining& cfg);

struct RunRecord {
  std::string row;  // report row label
  distill::Strategy strategy = distill::Strategy::kScratch;
  double temperature = 0.0;
  double w = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

struct SummaryRow {
  std::string row;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single run
  int runs = 0;
};

// MV-scratch, EMV-ST, EMV-TI, EMV-ST+TI
std::string row_label(distill::Strategy s);
inline constexpr const char* kTeacherRow = "OF-teacher";

struct ExperimentConfig {
  std::vector<distill::Strategy> strategies{distill::Strategy::kScratch, distill::Strategy::kSupervisionTransfer,
                                            distill::Strategy::kTeacherInit, distill::Strategy::kCombined};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::uint64_t teacher_seed = 1;
  double temperature = 2.0;
  std::optional<double> weight;
  StreamTraining training;
  std::filesystem::path out_dir;  // empty: nothing written
  bool verbose = false;
};

struct ExperimentReport {
  std::vector<RunRecord> runs;  // teacher first
  // Rows present in the runs, in the order MV-scratch, EMV-ST, EMV-TI,
  // EMV-ST+TI, OF-teacher.
  std::vector<SummaryRow> summary() const;
  std::optional<SummaryRow> row(const std::string& label) const;
};

// Trains (or reuses) the teacher, then every strategy x seed student.
// With out_dir set, the CSV and table are rewritten after every run, so a
// failure leaves the finished runs on disk.
ExperimentReport run_experiment(const PreparedData& data, const ExperimentConfig& cfg,
                                const nn::Network<float>* teacher = nullptr);

struct TemperaturePoint {
  double temperature = 0.0;
  std::optional<double> weight;  // unset: temperature^2
};

// ti+st students for every temperature x seed against one teacher.
std::vector<RunRecord> run_temperature_matrix(const PreparedData& data, const ExperimentConfig& cfg,
                                              const nn::Network<float>& teacher,
                                              const std::vector<TemperaturePoint>& points);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);
SummaryRow summarize(const std::string& label, const std::vector<double>& accuracies);

}  // namespace mvcnn::pipeline
