#include "mvcnn/motion/block_search.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "mvcnn/core/error.hpp"

namespace mvcnn::motion {

namespace {

std::atomic<std::uint64_t> g_sad_evaluations{0};

void check_block(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size, int search_range) {
  require(cur.width() == ref.width() && cur.height() == ref.height(), ErrorCode::kShapeMismatch,
          "current and reference frames differ in size");
  require(block_size > 0 && search_range >= 0, ErrorCode::kInvalidArgument, "invalid block size or search range");
  if (origin.x < 0 || origin.y < 0 || origin.x + block_size > cur.width() || origin.y + block_size > cur.height())
    fail(ErrorCode::kOutOfRange, "block at (" + std::to_string(origin.x) + "," + std::to_string(origin.y) +
                                     ") size " + std::to_string(block_size) + " is outside the frame");
}

bool candidate_inside(const Frame& ref, BlockOrigin origin, int block_size, int dx, int dy) {
  const int rx = origin.x - dx;
  const int ry = origin.y - dy;
  return rx >= 0 && ry >= 0 && rx + block_size <= ref.width() && ry + block_size <= ref.height();
}

}  // namespace

std::uint32_t block_sad(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size, int dx, int dy) {
  g_sad_evaluations.fetch_add(1, std::memory_order_relaxed);
  const int w = cur.width();
  const std::uint8_t* c = cur.luma().data() + static_cast<std::size_t>(origin.y) * w + origin.x;
  const std::uint8_t* r = ref.luma().data() + static_cast<std::size_t>(origin.y - dy) * w + (origin.x - dx);
  std::uint32_t sad = 0;
  for (int y = 0; y < block_size; ++y) {
    for (int x = 0; x < block_size; ++x) sad += static_cast<std::uint32_t>(std::abs(int(c[x]) - int(r[x])));
    c += w;
    r += w;
  }
  return sad;
}

bool better_candidate(const SearchResult& a, const SearchResult& b) noexcept {
  if (a.sad != b.sad) return a.sad < b.sad;
  const int ma = std::abs(a.dx) + std::abs(a.dy);
  const int mb = std::abs(b.dx) + std::abs(b.dy);
  if (ma != mb) return ma < mb;
  if (a.dy != b.dy) return a.dy < b.dy;
  return a.dx < b.dx;
}

SearchResult three_step_search(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size,
                               int search_range) {
  check_block(cur, ref, origin, block_size, search_range);
  SearchResult best{0, 0, block_sad(cur, ref, origin, block_size, 0, 0)};
  int step = 1;
  while (step * 2 <= (search_range + 1) / 2) step *= 2;
  if (search_range == 0) return best;
  for (; step >= 1; step /= 2) {
    const SearchResult center = best;
    for (int j = -1; j <= 1; ++j) {
      for (int i = -1; i <= 1; ++i) {
        if (i == 0 && j == 0) continue;
        const int dx = center.dx + i * step;
        const int dy = center.dy + j * step;
        if (std::abs(dx) > search_range || std::abs(dy) > search_range) continue;
        if (!candidate_inside(ref, origin, block_size, dx, dy)) continue;
        const SearchResult cand{dx, dy, block_sad(cur, ref, origin, block_size, dx, dy)};
        if (better_candidate(cand, best)) best = cand;
      }
    }
  }
  return best;
}

SearchResult full_search(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size, int search_range) {
  check_block(cur, ref, origin, block_size, search_range);
  SearchResult best{0, 0, block_sad(cur, ref, origin, block_size, 0, 0)};
  for (int dy = -search_range; dy <= search_range; ++dy) {
    for (int dx = -search_range; dx <= search_range; ++dx) {
      if ((dx == 0 && dy == 0) || !candidate_inside(ref, origin, block_size, dx, dy)) continue;
      const SearchResult cand{dx, dy, block_sad(cur, ref, origin, block_size, dx, dy)};
      if (better_candidate(cand, best)) best = cand;
    }
  }
  return best;
}

std::uint64_t sad_evaluations() noexcept { return g_sad_evaluations.load(std::memory_order_relaxed); }
void reset_sad_evaluations() noexcept { g_sad_evaluations.store(0, std::memory_order_relaxed); }

}  // namespace mvcnn::motion
