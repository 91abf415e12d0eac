#include "mvcnn/pipeline/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "mvcnn/core/binary_io.hpp"
#include "mvcnn/nn/checkpoint.hpp"

namespace mvcnn::pipeline {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum Salt : std::uint64_t { kInit = 1, kPlan = 2, kDropout = 3 };

SampleKind sample_kind(InputKind k) {
  return k == InputKind::kSpatial ? SampleKind::kImage : SampleKind::kMotionStack;
}

void say(bool verbose, const std::string& msg) {
  if (verbose) std::cerr << msg << std::endl;
}

TrainedStream fit(const PreparedData& data, const StreamTraining& cfg, const distill::DistillConfig& distill,
                  const nn::Network<float>* teacher, nn::Network<float> init, InputKind kind, double lr,
                  std::uint64_t seed) {
  require(!data.train.empty(), ErrorCode::kInvalidArgument, "no training clips");
  auto plan = plan_samples(data.train, cfg.stack, cfg.steps, cfg.batch, mix(seed, kPlan));
  std::optional<InputKind> teacher_kind;
  if (distill::uses_supervision(distill.strategy)) teacher_kind = InputKind::kFlow;
  AugmentConfig augment = cfg.augment;
  if (augment.mirror_labels.empty()) augment.mirror_labels = data.mirror_labels;
  auto source = make_batch_source(data.train, std::move(plan), cfg.batch, cfg.stack, kind, teacher_kind, augment);
  distill::TrainConfig tc;
  tc.steps = cfg.steps;
  tc.seed = mix(seed, kDropout);
  auto result = distill::train_student(distill, teacher, std::move(init), source,
                                       nn::LrSchedule::step_decay(lr, cfg.steps), tc);
  TrainedStream out{std::move(result.student), std::move(result.log), 0.0, {}};
  if (!out.log.empty()) out.train_accuracy = out.log.back().train_acc_window;
  out.test = evaluate(out.net, data.test, kind, cfg.stack, cfg.eval_stride, data.num_classes);
  return out;
}

}  // namespace

std::vector<SamplePlan> plan_samples(const std::vector<ClipFeatures>& clips, int stack, int steps, int batch,
                                     std::uint64_t seed) {
  require(steps >= 0 && batch > 0, ErrorCode::kInvalidArgument, "steps must be non-negative and batch positive");
  std::vector<int> usable;
  for (int i = 0; i < static_cast<int>(clips.size()); ++i) {
    if (clips[static_cast<std::size_t>(i)].length() >= stack)
      usable.push_back(i);
    else
      std::cerr << "warning: clip '" << clips[static_cast<std::size_t>(i)].clip_id
                << "' is shorter than one window and is skipped\n";
  }
  require(!usable.empty(), ErrorCode::kInvalidArgument, "no training clip is long enough for one window");
  std::mt19937_64 rng(seed);
  const std::size_t total = static_cast<std::size_t>(steps) * static_cast<std::size_t>(batch);
  std::vector<SamplePlan> plan;
  plan.reserve(total);
  while (plan.size() < total) {
    std::vector<int> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    for (int c : order) {
      if (plan.size() == total) break;
      std::uniform_int_distribution<int> pick(0, clips[static_cast<std::size_t>(c)].length() - stack);
      plan.push_back({c, pick(rng), rng()});
    }
  }
  return plan;
}

distill::BatchSource make_batch_source(const std::vector<ClipFeatures>& clips, std::vector<SamplePlan> plan,
                                       int batch, int stack, InputKind student_kind,
                                       std::optional<InputKind> teacher_kind, const AugmentConfig& augment) {
  augment.validate();
  return [&clips, plan = std::move(plan), batch, stack, student_kind, teacher_kind, augment](int step) {
    const std::size_t first = static_cast<std::size_t>(step) * static_cast<std::size_t>(batch);
    if (step < 0 || first + static_cast<std::size_t>(batch) > plan.size())
      fail(ErrorCode::kOutOfRange, "batch for step " + std::to_string(step) + " lies beyond the sample plan");
    distill::Batch b;
    std::vector<nn::Tensor<float>> student, teacher;
    for (int i = 0; i < batch; ++i) {
      const auto& s = plan[first + static_cast<std::size_t>(i)];
      const auto& clip = clips[static_cast<std::size_t>(s.clip)];
      auto raw = window_input(clip, student_kind, s.t0, stack);
      std::mt19937_64 rng(s.crop_seed);
      const auto window = sample_crop(raw.dim(1), raw.dim(2), augment, rng);
      student.push_back(apply_crop(raw, window, augment.out_size, sample_kind(student_kind)));
      if (teacher_kind) {
        auto traw = window_input(clip, *teacher_kind, s.t0, stack);
        teacher.push_back(apply_crop(traw, window, augment.out_size, sample_kind(*teacher_kind)));
      }
      const bool remap = window.flip && !augment.mirror_labels.empty();
      b.labels.push_back(remap ? augment.mirror_labels.at(static_cast<std::size_t>(clip.label)) : clip.label);
    }
    auto pack = [batch](const std::vector<nn::Tensor<float>>& xs) {
      const auto& s = xs.front().shape();
      nn::Tensor<float> out({batch, s[0], s[1], s[2]});
      const std::size_t per = xs.front().size();
      for (std::size_t i = 0; i < xs.size(); ++i) std::copy(xs[i].data(), xs[i].data() + per, out.data() + i * per);
      return out;
    };
    b.student_input = pack(student);
    if (teacher_kind) b.teacher_input = pack(teacher);
    return b;
  };
}

nn::TwoStreamConfig temporal_net_config(const PreparedData& data, const StreamTraining& cfg) {
  nn::TwoStreamConfig n;
  n.input_hw = cfg.augment.out_size;
  n.in_channels = 2 * cfg.stack;
  n.num_classes = data.num_classes;
  n.activation = nn::Activation::kPrelu;
  n.fc_dropout = cfg.fc_dropout;
  return n;
}

TrainedStream train_teacher(const PreparedData& data, const StreamTraining& cfg, std::uint64_t seed) {
  auto net = nn::build_mini_two_stream<float>(temporal_net_config(data, cfg));
  net.init_he(mix(seed, kInit));
  distill::DistillConfig d;
  d.strategy = distill::Strategy::kScratch;
  return fit(data, cfg, d, nullptr, std::move(net), InputKind::kFlow, cfg.lr_scratch, seed);
}

TrainedStream train_spatial(const PreparedData& data, const StreamTraining& cfg, std::uint64_t seed) {
  auto ncfg = temporal_net_config(data, cfg);
  ncfg.in_channels = 3;
  ncfg.activation = nn::Activation::kRelu;
  auto net = nn::build_mini_two_stream<float>(ncfg);
  net.init_he(mix(seed, kInit));
  distill::DistillConfig d;
  d.strategy = distill::Strategy::kScratch;
  return fit(data, cfg, d, nullptr, std::move(net), InputKind::kSpatial, cfg.lr_scratch, seed);
}

TrainedStream train_mv_student(const PreparedData& data, const StreamTraining& cfg,
                               const distill::DistillConfig& distill, const nn::Network<float>* teacher,
                               std::uint64_t seed) {
  auto net = nn::build_mini_two_stream<float>(temporal_net_config(data, cfg));
  net.init_he(mix(seed, kInit));
  double lr = distill::uses_teacher_init(distill.strategy) ? cfg.lr_finetune : cfg.lr_scratch;
  // The GT term carries weight w; dividing keeps its step size equal to the unweighted runs.
  if (distill::uses_supervision(distill.strategy)) lr /= distill.w();
  return fit(data, cfg, distill, teacher, std::move(net), InputKind::kMotionVectors, lr, seed);
}

std::string row_label(distill::Strategy s) {
  switch (s) {
    case distill::Strategy::kScratch:
      return "MV-scratch";
    case distill::Strategy::kSupervisionTransfer:
      return "EMV-ST";
    case distill::Strategy::kTeacherInit:
      return "EMV-TI";
    case distill::Strategy::kCombined:
      return "EMV-ST+TI";
  }
  return "?";
}

SummaryRow summarize(const std::string& label, const std::vector<double>& accuracies) {
  SummaryRow r;
  r.row = label;
  r.runs = static_cast<int>(accuracies.size());
  if (accuracies.empty()) return r;
  r.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / r.runs;
  if (r.runs > 1) {
    double ss = 0.0;
    for (double a : accuracies) ss += (a - r.mean) * (a - r.mean);
    r.sd = std::sqrt(ss / (r.runs - 1));
  }
  return r;
}

std::vector<SummaryRow> ExperimentReport::summary() const {
  std::vector<SummaryRow> rows;
  for (const std::string label : {"MV-scratch", "EMV-ST", "EMV-TI", "EMV-ST+TI", kTeacherRow})
    if (auto r = row(label)) rows.push_back(*r);
  return rows;
}

std::optional<SummaryRow> ExperimentReport::row(const std::string& label) const {
  std::vector<double> acc;
  for (const auto& r : runs)
    if (r.row == label) acc.push_back(r.accuracy);
  if (acc.empty()) return std::nullopt;
  return summarize(label, acc);
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  out << "strategy,seed,temperature,w,accuracy\n";
  for (const auto& r : runs)
    out << r.row << ',' << r.seed << ',' << r.temperature << ',' << r.w << ',' << std::setprecision(6) << r.accuracy
        << '\n';
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << std::left << std::setw(12) << "Model" << std::right << std::setw(10) << "Accuracy" << std::setw(8) << "sd"
      << std::setw(6) << "runs" << '\n';
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s%9.1f%%%8.1f%6d\n", r.row.c_str(), 100.0 * r.mean, 100.0 * r.sd, r.runs);
    out << buf;
  }
}

namespace {

void save_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  if (dir.empty()) return;
  std::ostringstream csv, table;
  write_runs_csv(csv, report.runs);
  write_summary_table(table, report.summary());
  const auto c = csv.str(), t = table.str();
  write_file(dir / "experiment.csv", Bytes(c.begin(), c.end()));
  write_file(dir / "experiment.txt", Bytes(t.begin(), t.end()));
}

void save_stream(const std::filesystem::path& dir, const TrainedStream& s) {
  if (dir.empty()) return;
  nn::save_checkpoint(s.net, dir / "model.nnw");
  std::ostringstream m;
  distill::write_metrics_csv(m, s.log);
  const auto text = m.str();
  write_file(dir / "metrics.csv", Bytes(text.begin(), text.end()));
}

std::filesystem::path sub(const std::filesystem::path& base, const std::string& name) {
  return base.empty() ? base : base / name;
}

}  // namespace

ExperimentReport run_experiment(const PreparedData& data, const ExperimentConfig& cfg,
                                const nn::Network<float>* teacher) {
  require(!cfg.seeds.empty(), ErrorCode::kInvalidArgument, "experiment needs at least one seed");
  ExperimentReport report;
  std::optional<TrainedStream> trained;
  if (teacher == nullptr) {
    say(cfg.verbose, "training teacher (seed " + std::to_string(cfg.teacher_seed) + ")");
    trained = train_teacher(data, cfg.training, cfg.teacher_seed);
    save_stream(sub(cfg.out_dir, "teacher"), *trained);
    teacher = &trained->net;
    report.runs.push_back({kTeacherRow, distill::Strategy::kScratch, 1.0, 1.0, cfg.teacher_seed,
                           trained->test.overall_accuracy});
  } else {
    const auto test = evaluate(*teacher, data.test, InputKind::kFlow, cfg.training.stack, cfg.training.eval_stride,
                               data.num_classes);
    report.runs.push_back({kTeacherRow, distill::Strategy::kScratch, 1.0, 1.0, cfg.teacher_seed, test.overall_accuracy});
  }
  save_report(cfg.out_dir, report);
  say(cfg.verbose, "  teacher accuracy " + std::to_string(report.runs.back().accuracy));

  for (auto strategy : cfg.strategies) {
    for (auto seed : cfg.seeds) {
      distill::DistillConfig d;
      d.strategy = strategy;
      d.temperature = cfg.temperature;
      d.weight = cfg.weight;
      const auto s = train_mv_student(data, cfg.training, d, teacher, seed);
      const std::string label = row_label(strategy);
      save_stream(sub(cfg.out_dir, "runs/" + distill::to_string(strategy) + "_seed" + std::to_string(seed)), s);
      const bool distilled = distill::uses_supervision(strategy);
      report.runs.push_back({label, strategy, distilled ? d.temperature : 1.0, distilled ? d.w() : 1.0, seed,
                             s.test.overall_accuracy});
      save_report(cfg.out_dir, report);
      say(cfg.verbose, "  " + label + " seed " + std::to_string(seed) + " accuracy " +
                           std::to_string(s.test.overall_accuracy));
    }
  }
  return report;
}

std::vector<RunRecord> run_temperature_matrix(const PreparedData& data, const ExperimentConfig& cfg,
                                              const nn::Network<float>& teacher,
                                              const std::vector<TemperaturePoint>& points) {
  std::vector<RunRecord> runs;
  for (const auto& p : points) {
    for (auto seed : cfg.seeds) {
      distill::DistillConfig d;
      d.strategy = distill::Strategy::kCombined;
      d.temperature = p.temperature;
      d.weight = p.weight;
      const auto s = train_mv_student(data, cfg.training, d, &teacher, seed);
      runs.push_back({row_label(d.strategy), d.strategy, d.temperature, d.w(), seed, s.test.overall_accuracy});
      say(cfg.verbose, "  Temp " + std::to_string(p.temperature) + " seed " + std::to_string(seed) + " accuracy " +
                           std::to_string(s.test.overall_accuracy));
      if (!cfg.out_dir.empty()) {
        std::ostringstream csv;
        write_runs_csv(csv, runs);
        const auto c = csv.str();
        write_file(cfg.out_dir / "temperature.csv", Bytes(c.begin(), c.end()));
      }
    }
  }
  return runs;
}

}  // namespace mvcnn::pipeline
