// src/dtw.cc
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

#include "dtw.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace audkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double frame_dist(const double *x, const double *y, int64_t dim) {
  double acc = 0.0;
  for (int64_t d = 0; d < dim; ++d) {
    double diff = x[d] - y[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

struct Cell {
  double cost = kInf;
  int64_t len = 0;  // cells on the best path, for tie-breaking and normalization

  bool better_than(const Cell &o) const {
    return cost < o.cost || (cost == o.cost && len < o.len);
  }
};

}  // namespace

double dtw_distance(const FeatureMatrix &a, const FeatureMatrix &b, int64_t band) {
  require(!a.empty() && !b.empty(), Status::kEmptySequence, "DTW needs two non-empty sequences");
  require(a.cols == b.cols, Status::kDimensionMismatch, "feature dims differ: ", a.cols, " vs ",
          b.cols);
  const int64_t ta = a.rows, tb = b.rows;
  int64_t width = band;
  if (width > 0) width = std::max(width, std::abs(ta - tb));

  // Two-row DP over (accumulated cost, path cells), lexicographic minimum.
  std::vector<Cell> prev(static_cast<size_t>(tb)), cur(static_cast<size_t>(tb));
  for (int64_t i = 0; i < ta; ++i) {
    int64_t j_lo = 0, j_hi = tb - 1;
    if (width > 0) {
      j_lo = std::max<int64_t>(0, i - width);
      j_hi = std::min<int64_t>(tb - 1, i + width);
    }
    std::fill(cur.begin(), cur.end(), Cell{});
    for (int64_t j = j_lo; j <= j_hi; ++j) {
      Cell best{};
      if (i == 0 && j == 0) {
        best = Cell{0.0, 0};
      } else {
        if (j > 0 && cur[static_cast<size_t>(j - 1)].better_than(best))
          best = cur[static_cast<size_t>(j - 1)];
        if (i > 0 && prev[static_cast<size_t>(j)].better_than(best))
          best = prev[static_cast<size_t>(j)];
        if (i > 0 && j > 0 && prev[static_cast<size_t>(j - 1)].better_than(best))
          best = prev[static_cast<size_t>(j - 1)];
      }
      if (best.cost == kInf) continue;
      double c = frame_dist(a.row(i), b.row(j), a.cols);
      cur[static_cast<size_t>(j)] = Cell{best.cost + c, best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell &end = prev[static_cast<size_t>(tb - 1)];
  require(end.cost != kInf, Status::kInfeasibleAlignment, "band ", band,
          " leaves no path between lengths ", ta, " and ", tb);
  return end.cost / static_cast<double>(end.len);
}

DistanceMatrix pairwise_distances(const std::vector<FeatureMatrix> &segments, int64_t band,
                                  int threads) {
  const int64_t n = static_cast<int64_t>(segments.size());
  DistanceMatrix m(n);
  if (n <= 1) return m;

  // Flatten the strict upper triangle so the workers split disjoint cells.
  std::vector<std::pair<int64_t, int64_t>> cells;
  cells.reserve(static_cast<size_t>(n * (n - 1) / 2));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = i + 1; j < n; ++j) cells.emplace_back(i, j);

  parallel_for(static_cast<int64_t>(cells.size()), threads, [&](int64_t c) {
    auto [i, j] = cells[static_cast<size_t>(c)];
    double dist = dtw_distance(segments[static_cast<size_t>(i)], segments[static_cast<size_t>(j)],
                               band);
    m.at(i, j) = dist;
    m.at(j, i) = dist;
  });
  return m;
}

void save_distance_matrix(const DistanceMatrix &m, const std::string &path) {
  FeatureMatrix f(m.n, m.n);
  f.data = m.d;
  save_matrix(f, path);
}

DistanceMatrix load_distance_matrix(const std::string &path) {
  FeatureMatrix f = load_matrix(path);
  require(f.rows == f.cols, Status::kCorruptFile, "distance matrix must be square, got ", f.rows,
          "x", f.cols);
  DistanceMatrix m(f.rows);
  m.d = std::move(f.data);
  return m;
}

}  // namespace audkit
