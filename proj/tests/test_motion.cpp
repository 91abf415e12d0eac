#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mvcnn/core/pgm.hpp"
#include "mvcnn/motion/block_search.hpp"
#include "mvcnn/motion/flow.hpp"
#include "mvcnn/motion/mv_maps.hpp"
#include "support.hpp"

using namespace mvcnn;
using namespace mvcnn::motion;

namespace {

std::uint32_t sad_oracle(const Frame& cur, const Frame& ref, BlockOrigin o, int bs, int dx, int dy) {
  std::uint32_t s = 0;
  for (int y = 0; y < bs; ++y)
    for (int x = 0; x < bs; ++x) s += std::abs(cur.at(o.x + x, o.y + y) - ref.at(o.x + x - dx, o.y + y - dy));
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

MotionField field_with(int bx, int by, int value) {
  auto f = MotionField::zeros(bx, by, 16);
  for (auto& mv : f.vectors()) mv = {value, -value};
  return f;
}

}  // namespace

TEST_CASE("block_sad matches a direct sum and is counted") {
  const auto cur = testing::noise_frame(32, 32, 1);
  const auto ref = testing::noise_frame(32, 32, 2);
  reset_sad_evaluations();
  CHECK(block_sad(cur, ref, {8, 8}, 8, 3, -2) == sad_oracle(cur, ref, {8, 8}, 8, 3, -2));
  CHECK(block_sad(cur, ref, {0, 0}, 16, 0, 0) == sad_oracle(cur, ref, {0, 0}, 16, 0, 0));
  CHECK(sad_evaluations() == 2);
}

TEST_CASE("identical frames give zero motion") {
  const auto f = testing::textured_frame(64, 64, 3);
  for (auto search : {three_step_search, full_search}) {
    const auto r = search(f, f, {16, 16}, 16, 7);
    CHECK(r == SearchResult{0, 0, 0});
  }
}

TEST_CASE("three-step search recovers a (-4, 6) displacement") {
  // cur shows the reference content moved by (-4, 6).
  const auto ref = testing::textured_frame(64, 64, 4);
  const auto cur = testing::textured_frame(64, 64, 4, -4.0, 6.0);
  const auto r = three_step_search(cur, ref, {24, 24}, 16, 7);
  CHECK(r == SearchResult{-4, 6, 0});
  CHECK(full_search(cur, ref, {24, 24}, 16, 7) == SearchResult{-4, 6, 0});
}

TEST_CASE("full search finds (3, -2)") {
  const auto ref = testing::noise_frame(48, 48, 5);
  Frame cur(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) cur.at(x, y) = ref.at(std::clamp(x - 3, 0, 47), std::clamp(y + 2, 0, 47));
  CHECK(full_search(cur, ref, {16, 16}, 16, 7) == SearchResult{3, -2, 0});
}

TEST_CASE("full search dominates three-step search") {
  for (int i = 0; i < 60; ++i) {
    const auto ref = testing::noise_frame(48, 48, 100 + i);
    const auto cur = testing::noise_frame(48, 48, 200 + i);
    const BlockOrigin o{(i * 7) % 33, (i * 11) % 33};
    const auto t = three_step_search(cur, ref, o, 16, 7);
    const auto f = full_search(cur, ref, o, 16, 7);
    CHECK(f.sad <= t.sad);
    CHECK(t.sad == sad_oracle(cur, ref, o, 16, t.dx, t.dy));
    CHECK(f.sad == sad_oracle(cur, ref, o, 16, f.dx, f.dy));
  }
}

TEST_CASE("searches stay inside the frame and the range") {
  const auto ref = testing::noise_frame(32, 32, 7);
  const auto cur = testing::noise_frame(32, 32, 8);
  for (auto search : {three_step_search, full_search}) {
    const auto r = search(cur, ref, {0, 0}, 16, 7);
    CHECK(r.dx <= 0);
    CHECK(r.dy <= 0);
    CHECK(r.dx >= -7);
    const auto s = search(cur, ref, {16, 16}, 16, 7);
    CHECK(s.dx >= 0);
    CHECK(s.dy >= 0);
    CHECK(s.dx <= 7);
  }
  CHECK_THROWS_AS(three_step_search(cur, ref, {20, 0}, 16, 7), Error);
  CHECK_THROWS_AS(full_search(cur, ref, {-1, 0}, 16, 7), Error);
}

TEST_CASE("tie-breaking prefers small displacements") {
  const Frame flat(48, 48, 90);
  CHECK(three_step_search(flat, flat, {16, 16}, 16, 7) == SearchResult{0, 0, 0});
  CHECK(full_search(flat, flat, {16, 16}, 16, 7) == SearchResult{0, 0, 0});
  CHECK(better_candidate({0, 0, 5}, {1, 0, 6}));
  CHECK(better_candidate({1, 0, 5}, {2, 0, 5}));
  CHECK(better_candidate({0, -1, 5}, {0, 1, 5}));
  CHECK(better_candidate({-1, 1, 5}, {1, 1, 5}));
  CHECK_FALSE(better_candidate({1, 1, 5}, {1, 1, 5}));
}

TEST_CASE("pure translations on bump texture are recovered exactly") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> shift(-7, 7);
  for (int c = 0; c < 50; ++c) {
    const int dx = shift(rng), dy = shift(rng);
    const auto ref = testing::bump_frame(96, 96, 300 + c);
    const auto cur = testing::bump_frame(96, 96, 300 + c, dx, dy);
    const auto full = full_search(cur, ref, {32, 32}, 16, 7);
    CHECK(full == SearchResult{dx, dy, 0});
    for (int by = 16; by + 16 <= 80; by += 16)
      for (int bx = 16; bx + 16 <= 80; bx += 16) {
        CAPTURE(dx);
        CAPTURE(dy);
        CHECK(three_step_search(cur, ref, {bx, by}, 16, 7) == SearchResult{dx, dy, 0});
      }
  }
}

TEST_CASE("search range other than 7 uses a smaller first step") {
  const auto ref = testing::textured_frame(64, 64, 12);
  const auto cur = testing::textured_frame(64, 64, 12, 2.0, -3.0);
  reset_sad_evaluations();
  const auto r = three_step_search(cur, ref, {24, 24}, 16, 3);
  CHECK(r == SearchResult{2, -3, 0});
  CHECK(sad_evaluations() <= 9 + 8 + 8);
}

TEST_CASE("flow: identical frames give zero flow") {
  const auto f = testing::textured_frame(64, 64, 13, 0, 0, 12, 32);
  const auto flow = estimate_flow(f, f);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    CHECK(std::fabs(flow.u[i]) < 1e-6);
    CHECK(std::fabs(flow.v[i]) < 1e-6);
  }
}

TEST_CASE("flow: flat frames fall back to zero") {
  const Frame a(64, 64, 100), b(64, 64, 140);
  const auto flow = estimate_flow(a, b);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    CHECK(flow.u[i] == 0.0f);
    CHECK(flow.v[i] == 0.0f);
  }
}

TEST_CASE("flow: a (2, 1) shift is recovered") {
  const auto prev = testing::textured_frame(64, 64, 14, 0, 0, 12, 32);
  const auto next = testing::textured_frame(64, 64, 14, 2, 1, 12, 32);
  const auto flow = estimate_flow(prev, next);
  std::vector<double> u(flow.u.begin(), flow.u.end()), v(flow.v.begin(), flow.v.end());
  CHECK(std::fabs(median(u) - 2.0) < 0.5);
  CHECK(std::fabs(median(v) - 1.0) < 0.5);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::isfinite(u[i]));
}

TEST_CASE("flow rejects mismatched or tiny frames") {
  CHECK_THROWS_AS(estimate_flow(Frame(64, 64), Frame(64, 32)), Error);
  CHECK_THROWS_AS(estimate_flow(Frame(32, 32), Frame(32, 32)), Error);
}

TEST_CASE("flow raw format round trips") {
  FlowField f(3, 2);
  for (int i = 0; i < 6; ++i) {
    f.u[i] = 0.5f * i;
    f.v[i] = -1.25f * i;
  }
  const auto b = serialize_flow(f);
  CHECK(b.size() == 8 + 2 * 6 * 4);
  CHECK(b[0] == 3);
  CHECK(deserialize_flow(b) == f);
  const Bytes cut(b.begin(), b.end() - 1);
  CHECK_THROWS_AS(deserialize_flow(cut), Error);
  const auto dir = std::filesystem::temp_directory_path() / "mvcnn_flow";
  write_flow(dir / "f.flow", f);
  CHECK(read_flow(dir / "f.flow") == f);
  std::filesystem::remove_all(dir);
}

TEST_CASE("I-frame gaps take the previous P field") {
  const MotionField gap(2, 2, 16, FrameType::kI);
  const auto f1 = field_with(2, 2, 1), f2 = field_with(2, 2, 2), f4 = field_with(2, 2, 4);
  const auto out = fill_iframe_gaps({gap, f1, f2, gap, f4});
  REQUIRE(out.size() == 5);
  CHECK(out[0] == MotionField::zeros(2, 2, 16));
  CHECK(out[1] == f1);
  CHECK(out[2] == f2);
  CHECK(out[3].vectors() == f2.vectors());
  CHECK(out[4] == f4);
  for (const auto& f : out) CHECK(f.has_vectors());
  CHECK(fill_iframe_gaps(out) == out);
  CHECK(fill_iframe_gaps({f1, f2}) == std::vector<MotionField>{f1, f2});
  const auto lead = fill_iframe_gaps({gap, gap, f2});
  CHECK(lead[0] == MotionField::zeros(2, 2, 16));
  CHECK(lead[1] == MotionField::zeros(2, 2, 16));
  CHECK(lead[2] == f2);
}

TEST_CASE("rasterize is block constant") {
  auto single = MotionField::zeros(1, 1, 8);
  single.at(0, 0) = {2, -1};
  const auto m = rasterize(single, 8, 8);
  for (int i = 0; i < 64; ++i) {
    CHECK(m.u[i] == 2.0f);
    CHECK(m.v[i] == -1.0f);
  }
  const auto z = rasterize(MotionField::zeros(4, 4, 16), 64, 64);
  CHECK(std::all_of(z.u.begin(), z.u.end(), [](float v) { return v == 0.0f; }));

  auto grid = MotionField::zeros(2, 2, 16);
  grid.at(0, 0) = {1, 2};
  grid.at(1, 0) = {-3, 0};
  grid.at(0, 1) = {5, -5};
  grid.at(1, 1) = {0, 7};
  const auto r = rasterize(grid, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      CHECK(r.u_at(x, y) == static_cast<float>(grid.at(x / 16, y / 16).dx));
      CHECK(r.v_at(x, y) == static_cast<float>(grid.at(x / 16, y / 16).dy));
    }
  CHECK(block_average(r, 16) == grid);
  const auto half = rasterize(grid, 16, 16, true);
  CHECK(half.u_at(0, 0) == 0.5f);
  CHECK_THROWS_AS(rasterize(grid, 0, 16), Error);
}

TEST_CASE("stack_inputs interleaves dx and dy per frame") {
  std::vector<FlowField> maps;
  for (int t = 0; t < 12; ++t) {
    FlowField f(4, 4);
    std::fill(f.u.begin(), f.u.end(), static_cast<float>(t));
    std::fill(f.v.begin(), f.v.end(), static_cast<float>(-t));
    maps.push_back(f);
  }
  const auto s = stack_inputs(maps, 1, 10, 1.0f);
  CHECK(s.shape() == nn::Shape{20, 4, 4});
  for (int c = 0; c < 20; ++c) {
    const float expect = (c % 2 == 0 ? 1.0f : -1.0f) * static_cast<float>(1 + c / 2);
    CHECK(s[static_cast<std::size_t>(c) * 16 + 5] == expect);
  }
  const auto scaled = stack_inputs(maps, 0, 10);
  CHECK(scaled[16 * 2] == doctest::Approx(1.0f / 7.0f));
  CHECK_THROWS_AS(stack_inputs(maps, 3, 10), Error);

  std::vector<FlowField> zeros(10, FlowField(4, 4));
  const auto zs = stack_inputs(zeros, 0, 10);
  CHECK(std::all_of(zs.values().begin(), zs.values().end(), [](float v) { return v == 0.0f; }));

  auto swapped = maps;
  std::swap(swapped[3], swapped[5]);
  const auto a = stack_inputs(maps, 0, 10), b = stack_inputs(swapped, 0, 10);
  for (int c = 0; c < 20; ++c) {
    const int frame = c / 2;
    const int src = frame == 3 ? 5 : frame == 5 ? 3 : frame;
    CHECK(b[static_cast<std::size_t>(c) * 16] == a[static_cast<std::size_t>(2 * src + c % 2) * 16]);
  }
}

TEST_CASE("motion PGM export offsets by 128") {
  auto f = MotionField::zeros(2, 1, 16);
  f.at(0, 0) = {-3, 5};
  const auto dir = std::filesystem::temp_directory_path() / "mvcnn_mvpgm";
  export_motion_pgm(f, dir / "dx.pgm", dir / "dy.pgm");
  const auto dx = read_pgm(dir / "dx.pgm"), dy = read_pgm(dir / "dy.pgm");
  CHECK(dx.width == 2);
  CHECK(dx.pixels[0] == 125);
  CHECK(dy.pixels[0] == 133);
  CHECK(dx.pixels[1] == 128);
  std::filesystem::remove_all(dir);
}
