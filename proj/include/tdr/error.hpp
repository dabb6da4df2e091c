#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace tdr {

enum class ErrorCode {
  kInvalidArgument,
  kNumericDomain,
  kUnsupportedOrder,
  kInstability,
  kNumericFailure,
  kDivergence,
  kSingular,
};

const char* to_string(ErrorCode code);

// Single exception type for the library. `index()` carries the offending
// time step (divergence) or reservoir index (instability) when relevant.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<long> index = std::nullopt)
      : std::runtime_error(what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<long> index_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              std::optional<long> index = std::nullopt) {
  throw Error(code, what, index);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace tdr
