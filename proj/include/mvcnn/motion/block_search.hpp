#pragma once

#include <cstdint>

#include "mvcnn/core/frame.hpp"

namespace mvcnn::motion {

struct SearchResult {
  int dx = 0;
  int dy = 0;
  std::uint32_t sad = 0;
  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

struct BlockOrigin {
  int x = 0;
  int y = 0;
};

// Sum of absolute differences between the block of `cur` at `origin` and the
// block of `ref` at origin - (dx, dy). Every call is counted.
std::uint32_t block_sad(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size, int dx, int dy);

// Classic three-step search: 9 candidates at step 4 around (0,0), recenter,
// step 2, recenter, step 1. For ranges other than 7 the first step is the
// largest power of two not exceeding (range + 1) / 2. Candidates whose
// reference block would leave the frame or exceed the range are skipped.
SearchResult three_step_search(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size,
                               int search_range = 7);

// Exhaustive scan of the (2r+1)^2 window with the same tie-breaking.
SearchResult full_search(const Frame& cur, const Frame& ref, BlockOrigin origin, int block_size, int search_range);

// Candidate ordering shared by both searches: lower SAD, then smaller
// |dx|+|dy|, then smaller dy, then smaller dx.
bool better_candidate(const SearchResult& a, const SearchResult& b) noexcept;

// Process-wide count of block_sad evaluations (instrumentation for cost claims).
std::uint64_t sad_evaluations() noexcept;
void reset_sad_evaluations() noexcept;

}  // namespace mvcnn::motion
