// src/metrics.h
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

#ifndef AUDKIT_METRICS_H_
#define AUDKIT_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.h"
#include "transcription.h"

namespace audkit {

struct MetricReport {
  double bitrate = 0.0;    // bits/second
  double abx_error = -1.0;  // [0,1]; -1 when not computed
  double purity = -1.0;    // [0,1]; -1 when not computed
  double nmi = -1.0;       // [0,1]; -1 when not computed
  int64_t symbol_count = 0;
  double duration_s = 0.0;
  int64_t inventory_size = 0;
};

/// Symbol rate times the empirical unigram entropy (bits) of the symbols in
/// `ts`.  Zero symbols give 0 bits/s (callers may warn).
double bitrate(const std::vector<Transcription> &ts, double total_duration_s);

/// Same formula on a bare symbol stream.
double bitrate_of_symbols(const std::vector<std::string> &symbols, double total_duration_s);

struct AbxTriplet {
  FeatureMatrix a, b, x;  // x belongs to a's category
};

/// Fraction of triplets where x lands closer to b than to a (ties count
/// half), with DTW as the distance.
double abx_error(const std::vector<AbxTriplet> &triplets, int64_t band = 0, int threads = 1);

/// The same aggregation from precomputed (d(x,a), d(x,b)) pairs, for
/// alternative distances.
double abx_from_distances(const std::vector<std::pair<double, double>> &dxa_dxb);

struct ClusterQuality {
  double purity = 0.0;
  double nmi = 0.0;
};

/// Purity and geometric-mean-normalized mutual information between two
/// labelings of the same items.
ClusterQuality cluster_quality(const std::vector<std::string> &predicted,
                               const std::vector<std::string> &reference);

/// Levenshtein distance over token sequences (for token-accuracy checks and
/// label-edit ABX distances).
int64_t edit_distance(const std::vector<std::string> &a, const std::vector<std::string> &b);

std::string metric_report_to_json(const MetricReport &r);
std::string metric_report_to_csv(const MetricReport &r);  // header line + value line

}  // namespace audkit

#endif  // AUDKIT_METRICS_H_
