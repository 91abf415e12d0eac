#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace mvcnn {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kOutOfRange,
  kBadMagic,
  kVersionMismatch,
  kChecksumMismatch,
  kTruncated,
  kCorrupt,
  kIo,
  kStaleCache,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as Error. `frame_index` / `layer_index` are
// filled when the failure can be pinned to one element of a sequence.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> index_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::optional<std::int64_t> index = std::nullopt) {
  throw Error(code, message, index);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mvcnn
