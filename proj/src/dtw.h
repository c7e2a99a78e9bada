// src/dtw.h
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

#ifndef AUDKIT_DTW_H_
#define AUDKIT_DTW_H_

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.h"

namespace audkit {

/// Symmetric pairwise distances with zero diagonal.
struct DistanceMatrix {
  int64_t n = 0;
  std::vector<double> d;  // n * n, row-major

  DistanceMatrix() = default;
  explicit DistanceMatrix(int64_t n_) : n(n_), d(static_cast<size_t>(n_ * n_), 0.0) {}

  double &at(int64_t i, int64_t j) { return d[static_cast<size_t>(i * n + j)]; }
  double at(int64_t i, int64_t j) const { return d[static_cast<size_t>(i * n + j)]; }
};

/// Path-length-normalized DTW distance between two feature sequences.
///
/// Alignment paths move by (1,0), (0,1) or (1,1) from cell (0,0) to
/// (Ta-1, Tb-1); cell cost is the Euclidean distance between the paired
/// frames.  Among all paths the minimum accumulated cost is found (ties
/// resolved toward the shortest such path) and divided by the path length in
/// cells.  `band` > 0 restricts |i - j| to max(band, |Ta - Tb|); 0 means no
/// restriction.
double dtw_distance(const FeatureMatrix &a, const FeatureMatrix &b, int64_t band = 0);

/// All-pairs dtw_distance over the upper triangle, mirrored.  `threads`
/// splits the triangle across workers; the result is independent of the
/// split.
DistanceMatrix pairwise_distances(const std::vector<FeatureMatrix> &segments, int64_t band = 0,
                                  int threads = 1);

/// Round-trips through the binary feature-matrix container (an n x n matrix
/// with no frame geometry).
void save_distance_matrix(const DistanceMatrix &m, const std::string &path);
DistanceMatrix load_distance_matrix(const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_DTW_H_
