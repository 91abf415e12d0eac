#include "mvcnn/cli/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvcnn/bench/bench.hpp"
#include "mvcnn/cli/viz.hpp"
#include "mvcnn/core/pgm.hpp"
#include "mvcnn/motion/mv_maps.hpp"
#include "mvcnn/nn/checkpoint.hpp"
#include "mvcnn/pipeline/experiment.hpp"
#include "mvcnn/videoio/container.hpp"
#include "mvcnn/videoio/dataset.hpp"

namespace mvcnn::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  std::uint64_t seed = 1;
  std::string out_dir;
  int threads = 0;
  bool quiet = false;

  // dataset gen
  int clips_per_class = 50;
  int resolution = 64;
  int length = 24;
  double train_fraction = 0.8;
  double noise = 2.0;

  // shared
  std::string dataset;
  int gop_length = 8;
  int block_size = 16;
  int stack = 10;
  int steps = 3000;
  int batch = 4;
  int stride = 4;
  double lr = 3e-3;
  double lr_finetune = 1e-3;
  double temp = 2.0;
  std::string w = "auto";
  std::string checkpoint;
  std::string teacher;
  std::string spatial;
  std::vector<double> fusion{1.0, 2.0};

  // encode / decode
  std::vector<std::string> clip_ids;
  std::string input;

  // train-student
  std::string strategy = "ti+st";
  std::string stream = "temporal";

  // experiment
  std::vector<std::string> strategies{"scratch", "st", "ti", "ti+st"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<double> temps;

  // eval
  std::string input_kind = "mv";

  // bench
  int iters = 5;
  int warmup = 1;
  int bench_clips = 8;
  std::string hardware_note;

  // viz-filters
  std::vector<std::string> checkpoints;
  std::string layer = "conv1";
  int zoom = 4;
};

std::optional<double> parse_weight(const std::string& w) {
  if (w == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(w, &used);
    if (used == w.size() && v >= 0.0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, "--w must be 'auto' or a non-negative number, got '" + w + "'");
}

void write_text(const fs::path& path, const std::string& text) { write_file(path, Bytes(text.begin(), text.end())); }

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err), root_(o.out_dir) {}

  void log(const std::string& msg) const {
    if (!o_.quiet) err_ << msg << std::endl;
  }

  void dataset_gen() {
    videoio::MotionShapesConfig cfg;
    cfg.seed = o_.seed;
    cfg.clips_per_class = o_.clips_per_class;
    cfg.resolution = o_.resolution;
    cfg.clip_length = o_.length;
    cfg.train_fraction = o_.train_fraction;
    cfg.noise_sigma = o_.noise;
    auto [manifest, clips] = videoio::generate_motionshapes(cfg);
    videoio::save_dataset(root_ / "dataset", manifest, clips);
    out_ << "wrote " << clips.size() << " clips to " << (root_ / "dataset").string() << '\n';
  }

  void encode() {
    const auto manifest = videoio::load_manifest(o_.dataset);
    const auto gop = gop_config();
    int n = 0;
    for (const auto& e : manifest.clips) {
      if (!o_.clip_ids.empty() && std::find(o_.clip_ids.begin(), o_.clip_ids.end(), e.clip_id) == o_.clip_ids.end())
        continue;
      const auto clip = videoio::load_clip(o_.dataset, manifest, e);
      videoio::write_container(videoio::encode(clip, gop), root_ / "containers" / (e.clip_id + ".mvs"));
      ++n;
    }
    if (n == 0) fail(ErrorCode::kInvalidArgument, "no clip matched the requested ids");
    out_ << "encoded " << n << " clips into " << (root_ / "containers").string() << '\n';
  }

  void decode() {
    const auto bytes = read_file(o_.input);
    const auto cc = videoio::deserialize_container(bytes);
    const auto fields = videoio::decode_motion_vectors(bytes);
    const auto frames = videoio::decode_frames(cc);
    const fs::path dir = root_ / "decoded" / fs::path(o_.input).stem();
    char name[64];
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
      write_pgm(dir / name, frames[i].width(), frames[i].height(), frames[i].luma());
      if (!fields[i].has_vectors()) continue;
      char dx[64], dy[64];
      std::snprintf(dx, sizeof dx, "mv_%04zu_dx.pgm", i);
      std::snprintf(dy, sizeof dy, "mv_%04zu_dy.pgm", i);
      motion::export_motion_pgm(fields[i], dir / dx, dir / dy);
    }
    int p_frames = 0;
    for (const auto& f : fields) p_frames += f.has_vectors();
    out_ << "decoded " << frames.size() << " frames (" << p_frames << " P) into " << dir.string() << '\n';
  }

  void train_teacher() {
    const auto data = load_data(true, false);
    const auto training = stream_training();
    log("training teacher on flow stacks");
    const auto s = pipeline::train_teacher(data, training, o_.seed);
    save_stream(root_ / "teacher", s, "teacher");
  }

  void train_student() {
    const auto training = stream_training();
    if (o_.stream == "spatial") {
      if (o_.strategy != "scratch")
        fail(ErrorCode::kInvalidArgument, "the spatial stream only trains with --strategy scratch");
      const auto data = load_data(false, true);
      log("training spatial stream");
      const auto s = pipeline::train_spatial(data, training, o_.seed);
      save_stream(root_ / "spatial", s, "spatial");
      return;
    }
    distill::DistillConfig d;
    d.strategy = distill::parse_strategy(o_.strategy);
    d.temperature = o_.temp;
    d.weight = parse_weight(o_.w);
    d.validate();
    const bool needs_teacher = d.strategy != distill::Strategy::kScratch;
    if (needs_teacher && o_.teacher.empty())
      fail(ErrorCode::kInvalidArgument, "--strategy " + o_.strategy + " requires --teacher");
    std::optional<nn::Network<float>> teacher;
    if (needs_teacher) teacher = nn::load_checkpoint(o_.teacher);
    const auto data = load_data(distill::uses_supervision(d.strategy), false);
    log("training student (" + o_.strategy + ")");
    const auto s = pipeline::train_mv_student(data, training, d, teacher ? &*teacher : nullptr, o_.seed);
    save_stream(root_ / ("student_" + o_.strategy), s, o_.strategy);
  }

  void experiment() {
    pipeline::ExperimentConfig cfg;
    cfg.strategies.clear();
    for (const auto& s : o_.strategies) cfg.strategies.push_back(distill::parse_strategy(s));
    cfg.seeds = o_.seeds;
    cfg.teacher_seed = o_.seed;
    cfg.temperature = o_.temp;
    cfg.weight = parse_weight(o_.w);
    cfg.training = stream_training();
    cfg.out_dir = root_ / "experiment";
    cfg.verbose = !o_.quiet;
    const auto data = load_data(true, false);
    std::optional<nn::Network<float>> teacher;
    if (!o_.teacher.empty()) teacher = nn::load_checkpoint(o_.teacher);
    const auto report = pipeline::run_experiment(data, cfg, teacher ? &*teacher : nullptr);
    pipeline::write_summary_table(out_, report.summary());

    if (!o_.temps.empty()) {
      const auto& t = teacher ? *teacher : nn::load_checkpoint(cfg.out_dir / "teacher" / "model.nnw");
      std::vector<pipeline::TemperaturePoint> points;
      for (double temp : o_.temps) points.push_back({temp, std::nullopt});
      const auto runs = pipeline::run_temperature_matrix(data, cfg, t, points);
      std::vector<pipeline::SummaryRow> rows;
      for (double temp : o_.temps) {
        std::vector<double> acc;
        for (const auto& r : runs)
          if (r.temperature == temp) acc.push_back(r.accuracy);
        std::ostringstream label;
        label << "Temp=" << temp;
        rows.push_back(pipeline::summarize(label.str(), acc));
      }
      std::ostringstream table;
      pipeline::write_summary_table(table, rows);
      write_text(cfg.out_dir / "temperature.txt", table.str());
      out_ << '\n' << table.str();
    }
  }

  void eval() {
    const pipeline::InputKind kind = input_kind();
    const auto net = nn::load_checkpoint(o_.checkpoint);
    std::optional<nn::Network<float>> spatial;
    if (!o_.spatial.empty()) spatial = nn::load_checkpoint(o_.spatial);
    const auto data = load_data(kind == pipeline::InputKind::kFlow, spatial.has_value());
    const auto report = spatial ? pipeline::evaluate_two_stream(*spatial, net, kind, data.test, o_.stack, o_.stride,
                                                                data.num_classes, fusion())
                                : pipeline::evaluate(net, data.test, kind, o_.stack, o_.stride, data.num_classes);
    json j;
    j["checkpoint"] = o_.checkpoint;
    j["spatial"] = o_.spatial;
    j["input"] = o_.input_kind;
    j["overall_accuracy"] = report.overall_accuracy;
    j["per_class_accuracy"] = report.per_class_accuracy;
    j["confusion"] = report.confusion;
    j["clips_evaluated"] = report.clips_evaluated;
    j["clips_skipped"] = report.clips_skipped;
    write_text(root_ / "eval" / "report.json", j.dump(2) + "\n");
    out_ << "accuracy " << report.overall_accuracy << " over " << report.clips_evaluated << " clips\n";
  }

  void bench() {
    const auto manifest = videoio::load_manifest(o_.dataset);
    std::vector<Clip> clips;
    for (const auto& e : manifest.clips) {
      if (e.split != videoio::Split::kTest) continue;
      if (static_cast<int>(clips.size()) == o_.bench_clips) break;
      clips.push_back(videoio::load_clip(o_.dataset, manifest, e));
    }
    const auto net = nn::load_checkpoint(o_.checkpoint);
    std::optional<nn::Network<float>> spatial;
    if (!o_.spatial.empty()) spatial = nn::load_checkpoint(o_.spatial);
    auto workload = bench::Workload::from_clips(std::move(clips), gop_config());
    workload.temporal = &net;
    workload.spatial = spatial ? &*spatial : nullptr;
    workload.stack = o_.stack;
    workload.fusion = fusion();
    bench::BenchConfig cfg;
    cfg.iters = o_.iters;
    cfg.warmup = o_.warmup;
    cfg.threads = o_.threads;
    cfg.hardware_note = o_.hardware_note;
    const auto report = bench::bench_pipeline(workload, cfg);
    std::ostringstream text, csv;
    bench::write_report_text(text, report);
    bench::write_report_csv(csv, report);
    write_text(root_ / "bench" / "report.txt", text.str());
    write_text(root_ / "bench" / "report.csv", csv.str());
    out_ << text.str();
  }

  void viz_filters() {
    std::vector<FilterMosaic> mosaics;
    for (const auto& c : o_.checkpoints) {
      const auto net = nn::load_checkpoint(c);
      mosaics.push_back(filter_mosaic(net, o_.layer, o_.zoom));
    }
    for (std::size_t i = 0; i < mosaics.size(); ++i) {
      const auto& m = mosaics[i].image;
      const fs::path path = root_ / "filters" / (fs::path(o_.checkpoints[i]).parent_path().filename().string() + "_" +
                                                 fs::path(o_.checkpoints[i]).stem().string() + ".pgm");
      write_pgm(path, m.width(), m.height(), m.luma());
      out_ << path.string() << '\n';
    }
    if (mosaics.size() > 1) {
      constexpr int kSpacer = 4;
      int w = 0, h = 0;
      for (const auto& m : mosaics) {
        w += m.image.width() + kSpacer;
        h = std::max(h, m.image.height());
      }
      w -= kSpacer;
      Frame sheet(w, h, 255);
      int x0 = 0;
      for (const auto& m : mosaics) {
        for (int y = 0; y < m.image.height(); ++y)
          for (int x = 0; x < m.image.width(); ++x) sheet.at(x0 + x, y) = m.image.at(x, y);
        x0 += m.image.width() + kSpacer;
      }
      const fs::path path = root_ / "filters" / "side_by_side.pgm";
      write_pgm(path, sheet.width(), sheet.height(), sheet.luma());
      out_ << path.string() << '\n';
    }
  }

 private:
  videoio::GopConfig gop_config() const {
    videoio::GopConfig g;
    g.gop_length = o_.gop_length;
    g.block_size = o_.block_size;
    g.validate();
    return g;
  }

  pipeline::FusionWeights fusion() const {
    if (o_.fusion.size() != 2) fail(ErrorCode::kInvalidArgument, "--fusion expects two weights, e.g. 1,2");
    pipeline::FusionWeights f{o_.fusion[0], o_.fusion[1]};
    f.validate();
    return f;
  }

  pipeline::InputKind input_kind() const {
    if (o_.input_kind == "mv") return pipeline::InputKind::kMotionVectors;
    if (o_.input_kind == "flow") return pipeline::InputKind::kFlow;
    fail(ErrorCode::kInvalidArgument, "--input must be mv or flow");
  }

  pipeline::StreamTraining stream_training() const {
    pipeline::StreamTraining t;
    t.steps = o_.steps;
    t.batch = o_.batch;
    t.stack = o_.stack;
    t.eval_stride = o_.stride;
    t.lr_scratch = o_.lr;
    t.lr_finetune = o_.lr_finetune;
    t.augment.validate();
    return t;
  }

  pipeline::PreparedData load_data(bool with_flow, bool with_frames) const {
    const auto manifest = videoio::load_manifest(o_.dataset);
    std::vector<Clip> clips;
    for (const auto& e : manifest.clips) clips.push_back(videoio::load_clip(o_.dataset, manifest, e));
    pipeline::FeatureConfig fc;
    fc.gop = gop_config();
    fc.with_flow = with_flow;
    fc.with_frames = with_frames;
    fc.flow_cache = root_ / "flow_cache";
    fc.threads = o_.threads;
    log("preparing " + std::to_string(clips.size()) + " clips");
    return pipeline::prepare_dataset(manifest, clips, fc);
  }

  void save_stream(const fs::path& dir, const pipeline::TrainedStream& s, const std::string& what) {
    nn::save_checkpoint(s.net, dir / "model.nnw");
    std::ostringstream m;
    distill::write_metrics_csv(m, s.log);
    write_text(dir / "metrics.csv", m.str());
    json j;
    j["model"] = what;
    j["train_accuracy_window"] = s.train_accuracy;
    j["test_accuracy"] = s.test.overall_accuracy;
    j["per_class_accuracy"] = s.test.per_class_accuracy;
    j["confusion"] = s.test.confusion;
    write_text(dir / "report.json", j.dump(2) + "\n");
    out_ << what << ": train " << s.train_accuracy << ", test " << s.test.overall_accuracy << " -> "
         << (dir / "model.nnw").string() << '\n';
  }

  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  fs::path root_;
};

// Global options plus the active subcommand's section; readable by --config.
std::string resolved_config(const CLI::App& app, const std::vector<std::string>& active) {
  std::istringstream all(app.config_to_str(true, false));
  std::string out, line;
  bool keep = true;
  while (std::getline(all, line)) {
    if (!line.empty() && line.front() == '[') {
      const std::string section = line.substr(1, line.size() - 2);
      keep = std::find(active.begin(), active.end(), section) != active.end();
      if (keep) out += line + "\n";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || !keep) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "config" || key.find('.') != std::string::npos || value == "\"\"" || value == "\"{}\"" || value == "[]" ||
        value.empty())
      continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Motion-vector two-stream action recognition toolkit"};
  app.set_config("--config", "", "Read options from a TOML config (flags override it)");
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "Seed for data generation, initialization and sampling")->capture_default_str();
  app.add_option("--out-dir", o.out_dir, "Directory receiving every artifact")->required();
  app.add_option("--threads", o.threads, "Worker threads for flow precompute and parallel bench (0 = all cores)")
      ->capture_default_str();
  app.add_flag("--quiet", o.quiet, "Suppress progress messages");

  auto gop_flags = [&](CLI::App* c) {
    c->add_option("--gop-length", o.gop_length, "Frames per group of pictures")->capture_default_str();
    c->add_option("--block-size", o.block_size, "Macroblock size (8 or 16)")->capture_default_str();
  };
  auto dataset_flag = [&](CLI::App* c) {
    c->add_option("--dataset", o.dataset, "Dataset directory (from 'dataset gen')")
        ->required()
        ->check(CLI::ExistingDirectory);
  };
  auto training_flags = [&](CLI::App* c) {
    c->add_option("--steps", o.steps, "SGD steps")->capture_default_str();
    c->add_option("--batch", o.batch, "Samples per step")->capture_default_str();
    c->add_option("--stack", o.stack, "Frames per motion stack")->capture_default_str();
    c->add_option("--stride", o.stride, "Evaluation window stride")->capture_default_str();
    c->add_option("--lr", o.lr, "Initial learning rate from random init")->capture_default_str();
    c->add_option("--lr-finetune", o.lr_finetune, "Initial learning rate after teacher init")->capture_default_str();
  };
  auto distill_flags = [&](CLI::App* c) {
    c->add_option("--temp", o.temp, "Distillation temperature")->capture_default_str();
    c->add_option("--w", o.w, "Ground-truth weight: auto (= temp^2) or a number")->capture_default_str();
  };

  app.get_option("--config")->configurable(false);
  auto* dataset = app.add_subcommand("dataset", "Dataset tools");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate the MotionShapes dataset into <out-dir>/dataset");
  gen->add_option("--clips-per-class", o.clips_per_class)->capture_default_str();
  gen->add_option("--resolution", o.resolution)->capture_default_str();
  gen->add_option("--length", o.length, "Frames per clip")->capture_default_str();
  gen->add_option("--train-fraction", o.train_fraction)->capture_default_str();
  gen->add_option("--noise", o.noise, "Gaussian noise sigma")->capture_default_str();

  auto* encode = app.add_subcommand("encode", "Encode dataset clips into MVS1 containers");
  dataset_flag(encode);
  gop_flags(encode);
  encode->add_option("--clip", o.clip_ids, "Clip ids to encode (default: all)")->delimiter(',')->capture_default_str();

  auto* decode = app.add_subcommand("decode", "Decode an MVS1 container into frame and motion PGMs");
  decode->add_option("--input", o.input, "Container file")->required()->check(CLI::ExistingFile);

  auto* teacher = app.add_subcommand("train-teacher", "Train the optical-flow teacher");
  dataset_flag(teacher);
  gop_flags(teacher);
  training_flags(teacher);

  auto* student = app.add_subcommand("train-student", "Train a motion-vector student (or the spatial stream)");
  dataset_flag(student);
  gop_flags(student);
  training_flags(student);
  distill_flags(student);
  student->add_option("--strategy", o.strategy, "scratch | ti | st | ti+st")->capture_default_str();
  student->add_option("--teacher", o.teacher, "Teacher checkpoint")->check(CLI::ExistingFile);
  student->add_option("--stream", o.stream, "temporal | spatial")
      ->check(CLI::IsMember({"temporal", "spatial"}))
      ->capture_default_str();

  auto* experiment = app.add_subcommand("experiment", "Teacher plus strategy x seed student matrix");
  dataset_flag(experiment);
  gop_flags(experiment);
  training_flags(experiment);
  distill_flags(experiment);
  experiment->add_option("--strategies", o.strategies, "Comma-separated strategies")->delimiter(',')->capture_default_str();
  experiment->add_option("--seeds", o.seeds, "Comma-separated student seeds")->delimiter(',')->capture_default_str();
  experiment->add_option("--teacher", o.teacher, "Reuse this teacher instead of training one")
      ->check(CLI::ExistingFile);
  experiment->add_option("--temps", o.temps, "Also run ti+st at these temperatures (w = temp^2)")->delimiter(',')->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  dataset_flag(eval);
  gop_flags(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Temporal network")->required()->check(CLI::ExistingFile);
  eval->add_option("--input", o.input_kind, "mv | flow")->capture_default_str();
  eval->add_option("--spatial", o.spatial, "Spatial network for two-stream fusion")->check(CLI::ExistingFile);
  eval->add_option("--fusion", o.fusion, "Spatial,temporal weights")->delimiter(',')->expected(2)->capture_default_str();
  eval->add_option("--stack", o.stack)->capture_default_str();
  eval->add_option("--stride", o.stride)->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Per-stage and end-to-end throughput");
  dataset_flag(bench);
  gop_flags(bench);
  bench->add_option("--checkpoint", o.checkpoint, "Temporal network")->required()->check(CLI::ExistingFile);
  bench->add_option("--spatial", o.spatial, "Spatial network")->check(CLI::ExistingFile);
  bench->add_option("--fusion", o.fusion, "Spatial,temporal weights")->delimiter(',')->expected(2)->capture_default_str();
  bench->add_option("--iters", o.iters)->capture_default_str();
  bench->add_option("--warmup", o.warmup)->capture_default_str();
  bench->add_option("--clips", o.bench_clips, "Test clips in the workload")->capture_default_str();
  bench->add_option("--stack", o.stack)->capture_default_str();
  bench->add_option("--hardware-note", o.hardware_note, "Free text recorded in the report");

  auto* viz = app.add_subcommand("viz-filters", "Render first-layer filters as PGM mosaics");
  viz->add_option("--checkpoint", o.checkpoints, "One or more checkpoints")->required()->delimiter(',')
      ->check(CLI::ExistingFile);
  viz->add_option("--layer", o.layer)->capture_default_str();
  viz->add_option("--zoom", o.zoom, "Pixels per weight")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) {
    sub->configurable();
    for (auto* nested : sub->get_subcommands({})) nested->configurable();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  // Bench defaults to one thread for stable timings.
  if (bench->parsed() && app.count("--threads") == 0) o.threads = 1;

  std::string name;
  std::vector<std::string> sections;
  for (auto* sub : app.get_subcommands()) {
    name = sub->get_name();
    sections.push_back(name);
    for (auto* nested : sub->get_subcommands()) {
      sections.push_back(name + "." + nested->get_name());
      name += "_" + nested->get_name();
    }
  }
  try {
    Runner r(o, out, err);
    const fs::path root(o.out_dir);
    write_text(root / ("config_" + name + ".toml"), resolved_config(app, sections));
    if (gen->parsed()) r.dataset_gen();
    else if (encode->parsed()) r.encode();
    else if (decode->parsed()) r.decode();
    else if (teacher->parsed()) r.train_teacher();
    else if (student->parsed()) r.train_student();
    else if (experiment->parsed()) r.experiment();
    else if (eval->parsed()) r.eval();
    else if (bench->parsed()) r.bench();
    else if (viz->parsed()) r.viz_filters();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace mvcnn::cli
