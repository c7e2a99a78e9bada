// src/metrics.cc
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

#include "metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dtw.h"
#include "json.hpp"

namespace audkit {

double bitrate_of_symbols(const std::vector<std::string> &symbols, double total_duration_s) {
  require(total_duration_s > 0.0, Status::kInvalidArgument, "total duration must be positive");
  if (symbols.empty()) return 0.0;
  std::map<std::string, int64_t> counts;
  for (const auto &s : symbols) ++counts[s];
  const double m = static_cast<double>(symbols.size());
  double entropy_bits = 0.0;
  for (const auto &[_, c] : counts) {
    double p = static_cast<double>(c) / m;
    entropy_bits -= p * std::log2(p);
  }
  return m / total_duration_s * entropy_bits;
}

double bitrate(const std::vector<Transcription> &ts, double total_duration_s) {
  std::vector<std::string> symbols;
  for (const auto &t : ts)
    for (const auto &tok : t.tokens) symbols.push_back(tok.label);
  return bitrate_of_symbols(symbols, total_duration_s);
}

double abx_from_distances(const std::vector<std::pair<double, double>> &dxa_dxb) {
  require(!dxa_dxb.empty(), Status::kEmptyInput, "no ABX triplets");
  double wrong = 0.0;
  for (const auto &[dxa, dxb] : dxa_dxb) {
    if (dxb < dxa)
      wrong += 1.0;
    else if (dxb == dxa)
      wrong += 0.5;
  }
  return wrong / static_cast<double>(dxa_dxb.size());
}

double abx_error(const std::vector<AbxTriplet> &triplets, int64_t band, int threads) {
  require(!triplets.empty(), Status::kEmptyInput, "no ABX triplets");
  std::vector<std::pair<double, double>> d(triplets.size());
  parallel_for(static_cast<int64_t>(triplets.size()), threads, [&](int64_t i) {
    const AbxTriplet &t = triplets[static_cast<size_t>(i)];
    d[static_cast<size_t>(i)] = {dtw_distance(t.x, t.a, band), dtw_distance(t.x, t.b, band)};
  });
  return abx_from_distances(d);
}

ClusterQuality cluster_quality(const std::vector<std::string> &predicted,
                               const std::vector<std::string> &reference) {
  require(!predicted.empty() && !reference.empty(), Status::kEmptyInput, "empty labeling");
  require(predicted.size() == reference.size(), Status::kLengthMismatch, "labelings have ",
          predicted.size(), " vs ", reference.size(), " items");
  const double n = static_cast<double>(predicted.size());

  std::map<std::string, std::map<std::string, int64_t>> table;  // pred -> ref -> count
  std::map<std::string, int64_t> pred_counts, ref_counts;
  for (size_t i = 0; i < predicted.size(); ++i) {
    ++table[predicted[i]][reference[i]];
    ++pred_counts[predicted[i]];
    ++ref_counts[reference[i]];
  }

  double purity_acc = 0.0;
  for (const auto &[_, row] : table) {
    int64_t top = 0;
    for (const auto &[__, c] : row) top = std::max(top, c);
    purity_acc += static_cast<double>(top);
  }

  auto entropy = [n](const std::map<std::string, int64_t> &counts) {
    double h = 0.0;
    for (const auto &[_, c] : counts) {
      double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double hp = entropy(pred_counts), hr = entropy(ref_counts);
  double mi = 0.0;
  for (const auto &[p, row] : table) {
    for (const auto &[r, c] : row) {
      double pj = static_cast<double>(c) / n;
      double pp = static_cast<double>(pred_counts[p]) / n;
      double pr = static_cast<double>(ref_counts[r]) / n;
      mi += pj * std::log(pj / (pp * pr));
    }
  }

  ClusterQuality q;
  q.purity = purity_acc / n;
  if (hp == 0.0 && hr == 0.0)
    q.nmi = 1.0;  // two one-cluster labelings agree perfectly
  else if (hp == 0.0 || hr == 0.0)
    q.nmi = 0.0;
  else
    q.nmi = std::min(1.0, std::max(0.0, mi / std::sqrt(hp * hr)));
  return q;
}

int64_t edit_distance(const std::vector<std::string> &a, const std::vector<std::string> &b) {
  const size_t la = a.size(), lb = b.size();
  std::vector<int64_t> prev(lb + 1), cur(lb + 1);
  for (size_t j = 0; j <= lb; ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= la; ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= lb; ++j) {
      int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[lb];
}

std::string metric_report_to_json(const MetricReport &r) {
  nlohmann::ordered_json j;
  j["bitrate_bits_per_s"] = r.bitrate;
  j["bitrate_formula"] = "symbol_rate * unigram_entropy_bits";
  if (r.abx_error >= 0.0) j["abx_error"] = r.abx_error;
  if (r.purity >= 0.0) j["purity"] = r.purity;
  if (r.nmi >= 0.0) {
    j["nmi"] = r.nmi;
    j["nmi_normalization"] = "geometric_mean";
  }
  j["symbol_count"] = r.symbol_count;
  j["duration_s"] = r.duration_s;
  j["inventory_size"] = r.inventory_size;
  return j.dump(2) + "\n";
}

std::string metric_report_to_csv(const MetricReport &r) {
  std::ostringstream out;
  out.precision(17);
  out << "bitrate_bits_per_s,abx_error,purity,nmi,symbol_count,duration_s,inventory_size\n";
  out << r.bitrate << "," << r.abx_error << "," << r.purity << "," << r.nmi << ","
      << r.symbol_count << "," << r.duration_s << "," << r.inventory_size << "\n";
  return out.str();
}

}  // namespace audkit
