// src/matrix.h
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

#ifndef AUDKIT_MATRIX_H_
#define AUDKIT_MATRIX_H_

#include <cstdint>
#include <string>
#include <vector>

#include "common.h"

namespace audkit {

/// Row-major T x D matrix of acoustic feature frames. `frame_shift` and
/// `frame_len` (seconds) record the frame geometry; both are 0 for matrices
/// that are not on a frame grid (e.g. a persisted distance matrix).
struct FeatureMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  double frame_shift = 0.0;
  double frame_len = 0.0;
  std::vector<double> data;  // rows * cols

  FeatureMatrix() = default;
  FeatureMatrix(int64_t r, int64_t c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r * c), fill) {}

  double *row(int64_t r) { return data.data() + r * cols; }
  const double *row(int64_t r) const { return data.data() + r * cols; }
  double &at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols + c)]; }
  double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols + c)]; }

  bool empty() const { return rows == 0; }

  /// Copy of rows [begin, end); keeps the frame geometry.
  FeatureMatrix slice_rows(int64_t begin, int64_t end) const;
};

/// Binary container: magic "AKFB", format version, rows, cols, frame
/// geometry, then row-major float64 payload (little-endian).
void save_matrix(const FeatureMatrix &m, const std::string &path);
FeatureMatrix load_matrix(const std::string &path);

/// One row per line, values with enough digits to round-trip.
void save_matrix_csv(const FeatureMatrix &m, const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_MATRIX_H_
