// src/common.cc
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

#include "common.h"

#include <algorithm>
#include <mutex>

namespace audkit {

const char *status_name(Status s) {
  switch (s) {
    case Status::kOk: return "Ok";
    case Status::kNotFound: return "NotFound";
    case Status::kUnsupportedFormat: return "UnsupportedFormat";
    case Status::kCorruptFile: return "CorruptFile";
    case Status::kTooShort: return "TooShort";
    case Status::kOutOfRange: return "OutOfRange";
    case Status::kEmptySequence: return "EmptySequence";
    case Status::kDimensionMismatch: return "DimensionMismatch";
    case Status::kUnknownCluster: return "UnknownCluster";
    case Status::kSegmentTooShort: return "SegmentTooShort";
    case Status::kInfeasibleAlignment: return "InfeasibleAlignment";
    case Status::kUnknownLabel: return "UnknownLabel";
    case Status::kEmptyInput: return "EmptyInput";
    case Status::kInconsistentAlignment: return "InconsistentAlignment";
    case Status::kNoUsableClusters: return "NoUsableClusters";
    case Status::kEmptyCorpus: return "EmptyCorpus";
    case Status::kTargetExceedsKinds: return "TargetExceedsKinds";
    case Status::kMissingOccurrence: return "MissingOccurrence";
    case Status::kUnknownUnit: return "UnknownUnit";
    case Status::kLengthMismatch: return "LengthMismatch";
    case Status::kEmptyTranscriptions: return "EmptyTranscriptions";
    case Status::kInvalidArgument: return "InvalidArgument";
    case Status::kInvalidConfig: return "InvalidConfig";
    case Status::kIoError: return "IoError";
    case Status::kParseError: return "ParseError";
    case Status::kInternal: return "Internal";
  }
  return "Internal";
}

void parallel_for(int64_t n, int threads, const std::function<void(int64_t)> &fn) {
  if (n <= 0) return;
  int workers = threads;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  workers = static_cast<int>(std::min<int64_t>(workers, n));
  if (workers == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    int64_t begin = n * w / workers;
    int64_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end]() {
      try {
        for (int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

uint64_t fnv1a64(const std::string &bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(uint64_t value) {
  static const char *digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace audkit
