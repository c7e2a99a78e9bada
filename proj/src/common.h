// src/common.h
//
// Copyright 2026  The audkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AUDKIT_COMMON_H_
#define AUDKIT_COMMON_H_

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace audkit {

inline constexpr const char *kVersion = "0.1.0";

/// Error categories. Values are stable; they map 1:1 onto the C API status
/// codes and onto the machine-parsable category names printed by the CLI.
enum class Status {
  kOk = 0,
  kNotFound = 1,
  kUnsupportedFormat = 2,
  kCorruptFile = 3,
  kTooShort = 4,
  kOutOfRange = 5,
  kEmptySequence = 6,
  kDimensionMismatch = 7,
  kUnknownCluster = 8,
  kSegmentTooShort = 9,
  kInfeasibleAlignment = 10,
  kUnknownLabel = 11,
  kEmptyInput = 12,
  kInconsistentAlignment = 13,
  kNoUsableClusters = 14,
  kEmptyCorpus = 15,
  kTargetExceedsKinds = 16,
  kMissingOccurrence = 17,
  kUnknownUnit = 18,
  kLengthMismatch = 19,
  kEmptyTranscriptions = 20,
  kInvalidArgument = 21,
  kInvalidConfig = 22,
  kIoError = 23,
  kParseError = 24,
  kInternal = 25,
};

const char *status_name(Status s);

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string &detail)
      : std::runtime_error(std::string(status_name(status)) + ": " + detail),
        status_(status),
        detail_(detail) {}

  Status status() const { return status_; }
  const std::string &detail() const { return detail_; }

 private:
  Status status_;
  std::string detail_;
};

namespace internal {
inline void format_parts(std::ostringstream &) {}
template <typename T, typename... Rest>
void format_parts(std::ostringstream &os, const T &v, Rest &&...rest) {
  os << v;
  format_parts(os, std::forward<Rest>(rest)...);
}
}  // namespace internal

template <typename... Parts>
[[noreturn]] void throw_error(Status status, Parts &&...parts) {
  std::ostringstream os;
  internal::format_parts(os, std::forward<Parts>(parts)...);
  throw Error(status, os.str());
}

template <typename... Parts>
void require(bool cond, Status status, Parts &&...parts) {
  if (!cond) throw_error(status, std::forward<Parts>(parts)...);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Work is split into contiguous index blocks; callers must
/// write results into per-index slots so the outcome does not depend on the
/// partitioning.
void parallel_for(int64_t n, int threads, const std::function<void(int64_t)> &fn);

/// FNV-1a over a byte string, used for config fingerprints in run metadata.
uint64_t fnv1a64(const std::string &bytes);

std::string to_hex(uint64_t value);

}  // namespace audkit

#endif  // AUDKIT_COMMON_H_
