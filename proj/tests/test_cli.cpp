#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mvcnn/cli/cli.hpp"
#include "mvcnn/cli/viz.hpp"
#include "mvcnn/core/pgm.hpp"
#include "mvcnn/nn/checkpoint.hpp"
#include "mvcnn/videoio/container.hpp"

using namespace mvcnn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mvcnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mvcnn_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

// Shared tiny dataset: 2 clips per class, 16 frames, half held out.
const fs::path& dataset_root() {
  static const fs::path root = [] {
    const auto dir = fresh_dir("data");
    const auto r = invoke({"--out-dir", dir.string(), "--quiet", "dataset", "gen", "--clips-per-class", "2", "--length",
                        "16", "--train-fraction", "0.5"});
    REQUIRE(r.code == 0);
    return dir;
  }();
  return root;
}

std::string dataset() { return (dataset_root() / "dataset").string(); }

const std::vector<std::string> kTiny{"--steps", "2", "--batch", "2", "--stride", "6"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("missing required flags fail without writing anything") {
  const auto dir = fresh_dir("missing");
  const auto no_out = invoke({"dataset", "gen"});
  CHECK(no_out.code != 0);
  CHECK(no_out.err.find("--out-dir") != std::string::npos);

  const auto no_dataset = invoke({"--out-dir", dir.string(), "encode"});
  CHECK(no_dataset.code != 0);
  CHECK(no_dataset.err.find("--dataset") != std::string::npos);
  CHECK_FALSE(fs::exists(dir));

  const auto no_sub = invoke({"--out-dir", dir.string()});
  CHECK(no_sub.code != 0);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("unknown flags and bad values are rejected") {
  const auto dir = fresh_dir("unknown");
  CHECK(invoke({"--out-dir", dir.string(), "dataset", "gen", "--bogus", "1"}).code != 0);
  CHECK(invoke({"--out-dir", dir.string(), "train-student", "--dataset", dataset(), "--stream", "audio"}).code != 0);
  CHECK_FALSE(fs::exists(dir));
  const auto bad_w = invoke({"--out-dir", dir.string(), "--quiet", "train-student", "--dataset", dataset(), "--strategy",
                          "st", "--w", "heavy"});
  CHECK(bad_w.code == 2);
  CHECK(bad_w.err.find("--w") != std::string::npos);
  const auto bad_strategy =
      invoke({"--out-dir", dir.string(), "--quiet", "train-student", "--dataset", dataset(), "--strategy", "combined"});
  CHECK(bad_strategy.code == 2);
  const auto no_teacher =
      invoke({"--out-dir", dir.string(), "--quiet", "train-student", "--dataset", dataset(), "--strategy", "ti"});
  CHECK(no_teacher.code == 2);
  CHECK(no_teacher.err.find("--teacher") != std::string::npos);
}

TEST_CASE("dataset gen writes a loadable dataset and its config") {
  const auto& root = dataset_root();
  CHECK(fs::exists(root / "dataset" / "manifest.json"));
  CHECK(fs::exists(root / "config_dataset_gen.toml"));
  const auto manifest = nlohmann::json::parse(std::ifstream(root / "dataset" / "manifest.json"));
  CHECK(manifest["clips"].size() == 16);
}

TEST_CASE("encode and decode round trip through files") {
  const auto dir = fresh_dir("codec");
  const auto enc = invoke({"--out-dir", dir.string(), "--quiet", "encode", "--dataset", dataset(), "--clip",
                        "translate_left_0,zoom_in_1", "--gop-length", "4"});
  REQUIRE(enc.code == 0);
  const auto container = dir / "containers" / "translate_left_0.mvs";
  REQUIRE(fs::exists(container));
  CHECK(fs::exists(dir / "containers" / "zoom_in_1.mvs"));
  CHECK_FALSE(fs::exists(dir / "containers" / "zoom_in_0.mvs"));
  const auto cc = videoio::read_container(container);
  CHECK(cc.gop.gop_length == 4);
  CHECK(cc.frame_count() == 16);

  const auto dec = invoke({"--out-dir", dir.string(), "--quiet", "decode", "--input", container.string()});
  REQUIRE(dec.code == 0);
  const auto out = dir / "decoded" / "translate_left_0";
  CHECK(fs::exists(out / "frame_0000.pgm"));
  CHECK(fs::exists(out / "frame_0015.pgm"));
  CHECK(fs::exists(out / "mv_0001_dx.pgm"));
  CHECK(fs::exists(out / "mv_0001_dy.pgm"));
  CHECK_FALSE(fs::exists(out / "mv_0004_dx.pgm"));  // I-frame
  CHECK(read_pgm(out / "mv_0001_dx.pgm").width == 4);

  // Corrupt containers surface as structured errors.
  auto bytes = read_file(container);
  bytes[40] ^= 1;
  write_file(dir / "bad.mvs", bytes);
  const auto bad = invoke({"--out-dir", dir.string(), "--quiet", "decode", "--input", (dir / "bad.mvs").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("checksum") != std::string::npos);
}

TEST_CASE("viz: mosaic layout, constant filter and non-conv layers") {
  auto net = nn::build_mini_two_stream<float>({});
  net.init_he(3);
  for (int i = 0; i < 20 * 49; ++i) net.layer_params(0)[0][static_cast<std::size_t>(i)] = 0.0f;  // filter 0
  const auto m = cli::filter_mosaic(net, "conv1", 2);
  CHECK(m.layout.tiles == 32);
  CHECK(m.layout.cols == 6);
  CHECK(m.layout.rows == 6);
  CHECK(m.layout.tile_width == 2 * 7 * 2 + 1);
  CHECK(m.layout.tile_height == 10 * 7 * 2 + 9);
  CHECK(m.image.width() == 1 + 6 * (m.layout.tile_width + 1));
  // Tile 7 sits at row 1, column 1.
  CHECK(m.layout.tile_x(7) == 1 + (m.layout.tile_width + 1));
  CHECK(m.layout.tile_y(7) == 1 + (m.layout.tile_height + 1));
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 14; ++x) CHECK(m.image.at(m.layout.tile_x(0) + x, m.layout.tile_y(0) + y) == 128);
  // Normalized filters reach both ends of the range.
  int lo = 255, hi = 0;
  for (int y = 0; y < m.layout.tile_height; ++y)
    for (int x = 0; x < 14; ++x) {
      const int v = m.image.at(m.layout.tile_x(1) + x, m.layout.tile_y(1) + y);
      if (x < 14 && (y % 15) < 14) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  CHECK(lo == 0);
  CHECK(hi == 255);

  try {
    cli::filter_mosaic(net, "fc6");
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    CHECK(e.index() == std::optional<std::int64_t>(9));
  }
  CHECK_THROWS_AS(cli::filter_mosaic(net, "nope"), Error);

  nn::TwoStreamConfig rgb;
  rgb.in_channels = 3;
  auto spatial = nn::build_mini_two_stream<float>(rgb);
  spatial.init_he(4);
  const auto s = cli::filter_mosaic(spatial, "conv1", 1);
  CHECK(s.layout.tile_width == 3 * 7 + 2);
  CHECK(s.layout.tile_height == 7);
}

TEST_CASE("training, evaluation, bench and filters end to end") {
  const auto dir = fresh_dir("train");
  const auto out = dir.string();
  REQUIRE(invoke(with({"--out-dir", out, "--quiet", "train-teacher", "--dataset", dataset()}, kTiny)).code == 0);
  const auto teacher = dir / "teacher" / "model.nnw";
  REQUIRE(fs::exists(teacher));
  CHECK(fs::exists(dir / "teacher" / "metrics.csv"));
  CHECK(count_lines(dir / "teacher" / "metrics.csv") == 3);

  REQUIRE(invoke(with({"--out-dir", out, "--quiet", "train-student", "--dataset", dataset(), "--strategy", "ti+st",
                    "--teacher", teacher.string(), "--temp", "3", "--w", "1.5"},
                   kTiny))
              .code == 0);
  const auto student = dir / "student_ti+st" / "model.nnw";
  REQUIRE(fs::exists(student));
  const auto cfg = dir / "config_train-student.toml";
  REQUIRE(fs::exists(cfg));
  std::stringstream toml;
  toml << std::ifstream(cfg).rdbuf();
  CHECK(toml.str().find("[train-student]") != std::string::npos);
  CHECK(toml.str().find("w=1.5") != std::string::npos);
  CHECK(toml.str().find("[experiment]") == std::string::npos);

  REQUIRE(invoke(with({"--out-dir", out, "--quiet", "train-student", "--dataset", dataset(), "--strategy", "scratch",
                    "--stream", "spatial"},
                   kTiny))
              .code == 0);
  const auto spatial = dir / "spatial" / "model.nnw";
  REQUIRE(fs::exists(spatial));

  const auto ev = invoke({"--out-dir", out, "--quiet", "eval", "--dataset", dataset(), "--checkpoint", student.string(),
                       "--spatial", spatial.string(), "--fusion", "1,2", "--stride", "6"});
  REQUIRE(ev.code == 0);
  const auto report = nlohmann::json::parse(std::ifstream(dir / "eval" / "report.json"));
  CHECK(report["clips_evaluated"] == 8);
  CHECK(report["confusion"].size() == 8);

  const auto b = invoke({"--out-dir", out, "--quiet", "bench", "--dataset", dataset(), "--checkpoint", student.string(),
                      "--iters", "1", "--warmup", "0", "--clips", "2"});
  REQUIRE(b.code == 0);
  CHECK(fs::exists(dir / "bench" / "report.txt"));
  CHECK(count_lines(dir / "bench" / "report.csv") == 6);
  CHECK(b.out.find("real-time threshold 25 fps") != std::string::npos);
  CHECK(b.out.find("noisy") != std::string::npos);

  const auto v = invoke({"--out-dir", out, "--quiet", "viz-filters", "--checkpoint",
                      student.string() + "," + teacher.string()});
  REQUIRE(v.code == 0);
  CHECK(fs::exists(dir / "filters" / "student_ti+st_model.pgm"));
  CHECK(fs::exists(dir / "filters" / "teacher_model.pgm"));
  const auto side = read_pgm(dir / "filters" / "side_by_side.pgm");
  const auto one = read_pgm(dir / "filters" / "teacher_model.pgm");
  CHECK(side.width == 2 * one.width + 4);
  CHECK(invoke({"--out-dir", out, "--quiet", "viz-filters", "--checkpoint", teacher.string(), "--layer", "pool1"}).code ==
        2);
}

TEST_CASE("experiment: 12 student runs plus the teacher, reproducible from its config") {
  const auto dir = fresh_dir("experiment");
  const auto r = invoke(with({"--out-dir", dir.string(), "--quiet", "experiment", "--dataset", dataset(), "--strategies",
                           "scratch,ti,st,ti+st", "--seeds", "1,2,3"},
                          kTiny));
  REQUIRE(r.code == 0);
  const auto exp = dir / "experiment";
  CHECK(count_lines(exp / "experiment.csv") == 1 + 13);
  CHECK(fs::exists(exp / "experiment.txt"));
  CHECK(fs::exists(exp / "teacher" / "model.nnw"));
  int run_dirs = 0;
  for (const auto& e : fs::directory_iterator(exp / "runs")) run_dirs += e.is_directory();
  CHECK(run_dirs == 12);

  std::stringstream first;
  first << std::ifstream(exp / "experiment.csv").rdbuf();
  const auto again = fresh_dir("experiment_again");
  fs::create_directories(again);
  fs::copy_file(dir / "config_experiment.toml", again / "run.toml");
  const auto rerun = invoke({"--config", (again / "run.toml").string(), "--out-dir", again.string()});
  REQUIRE(rerun.code == 0);
  std::stringstream second;
  second << std::ifstream(again / "experiment" / "experiment.csv").rdbuf();
  CHECK(first.str() == second.str());
}
