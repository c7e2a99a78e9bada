// tests/testutil.h
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

#ifndef AUDKIT_TESTS_TESTUTIL_H_
#define AUDKIT_TESTS_TESTUTIL_H_

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "config.h"
#include "dtw.h"
#include "graph.h"
#include "hmm.h"
#include "manifest.h"
#include "matrix.h"
#include "metrics.h"
#include "pipeline.h"
#include "rng.h"
#include "wave.h"

namespace audkit {
namespace testing {

// ---------------------------------------------------------------------------
// Scratch directories
// ---------------------------------------------------------------------------

/// Self-deleting scratch directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("audkit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string &name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Synthetic feature-space corpora
// ---------------------------------------------------------------------------

/// Region mean for CVC template `tpl`, region 0/1/2 = onset/rhyme/offset.
/// Every (template, region) pair sits at least 3 units from every other and
/// from the zero "silence" point, so with frame noise around 0.3 the
/// clustering and alignment optima are unambiguous.
inline std::vector<double> region_mean(int64_t tpl, int64_t region, int64_t dims) {
  std::vector<double> m(static_cast<size_t>(dims));
  double base = 3.0 * static_cast<double>(tpl * 3 + region + 1);
  for (int64_t d = 0; d < dims; ++d)
    m[static_cast<size_t>(d)] = (d % 2 == 0 ? base : -base) + 0.5 * static_cast<double>(d);
  return m;
}

struct SyntheticCorpus {
  PipelineConfig cfg;     // feature-space settings; the frontend block is unused
  AnalyzedCorpus corpus;  // features/segments/silence filled in; waves stay empty
  Clustering truth;       // segments grouped by template identity
  std::vector<std::vector<int64_t>> token_truth;                // per utterance
  std::vector<std::vector<std::pair<int64_t, int64_t>>> spans;  // syllable frame spans
  int64_t n_templates = 0;
};

/// Continuous utterances of shuffled round-robin CVC syllables separated by
/// zero-mean "silence" frames.  n_templates * instances_per_template
/// syllables are spread evenly over n_utts utterances (must divide evenly).
inline SyntheticCorpus make_feature_corpus(uint64_t seed, int64_t dims, int64_t n_templates,
                                           int64_t n_utts, int64_t instances_per_template,
                                           double noise = 0.3) {
  SyntheticCorpus out;
  out.n_templates = n_templates;
  out.cfg.threads = 2;
  out.cfg.seed = static_cast<int64_t>(seed);
  out.cfg.stage1_max_iter = 15;
  out.cfg.stage2_max_iter = 10;

  Rng rng(seed);
  const int64_t total = n_templates * instances_per_template;
  const int64_t per_utt = total / n_utts;
  const double shift = 0.01, flen = 0.025;

  std::vector<int64_t> order(static_cast<size_t>(total));
  for (int64_t i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i % n_templates;
  for (int64_t i = total - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)],
              order[rng.below(static_cast<uint64_t>(i + 1))]);

  std::vector<std::vector<double>> rows;
  auto emit = [&](const std::vector<double> &mean, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
      std::vector<double> fr(mean);
      for (double &v : fr) v += noise * rng.gaussian();
      rows.push_back(std::move(fr));
    }
  };

  std::vector<std::vector<double>> silence_rows;
  const std::vector<double> silence_mean(static_cast<size_t>(dims), 0.0);
  out.token_truth.resize(static_cast<size_t>(n_utts));
  out.spans.resize(static_cast<size_t>(n_utts));
  out.truth.assignment.assign(static_cast<size_t>(total), 0);
  out.truth.clusters.assign(static_cast<size_t>(n_templates), {});

  int64_t seg_index = 0;
  for (int64_t u = 0; u < n_utts; ++u) {
    rows.clear();
    std::vector<std::pair<int64_t, int64_t>> silence_spans;
    auto gap = [&]() {
      int64_t start = static_cast<int64_t>(rows.size());
      emit(silence_mean, 8 + static_cast<int64_t>(rng.below(5)));
      silence_spans.emplace_back(start, static_cast<int64_t>(rows.size()));
    };
    gap();
    for (int64_t s = 0; s < per_utt; ++s) {
      int64_t tpl = order[static_cast<size_t>(u * per_utt + s)];
      int64_t start = static_cast<int64_t>(rows.size());
      emit(region_mean(tpl, 0, dims), 4 + static_cast<int64_t>(rng.below(3)));
      emit(region_mean(tpl, 1, dims), 8 + static_cast<int64_t>(rng.below(5)));
      emit(region_mean(tpl, 2, dims), 4 + static_cast<int64_t>(rng.below(3)));
      int64_t end = static_cast<int64_t>(rows.size());
      gap();

      out.token_truth[static_cast<size_t>(u)].push_back(tpl);
      out.spans[static_cast<size_t>(u)].emplace_back(start, end);
      Segment seg;
      seg.utterance_id = "utt" + std::to_string(u);
      seg.start_frame = start;
      seg.end_frame = end;
      seg.peak_frame = (start + end) / 2;
      out.corpus.segments.push_back(seg);
      out.corpus.segment_utterance.push_back(u);
      out.truth.assignment[static_cast<size_t>(seg_index)] = tpl;
      out.truth.clusters[static_cast<size_t>(tpl)].push_back(seg_index);
      ++seg_index;
    }

    FeatureMatrix f(static_cast<int64_t>(rows.size()), dims);
    f.frame_shift = shift;
    f.frame_len = flen;
    for (size_t r = 0; r < rows.size(); ++r)
      std::copy(rows[r].begin(), rows[r].end(), f.row(static_cast<int64_t>(r)));
    for (const auto &[b, e] : silence_spans)
      for (int64_t r = b; r < e; ++r) silence_rows.push_back(
          std::vector<double>(f.row(r), f.row(r) + dims));
    out.corpus.ids.push_back("utt" + std::to_string(u));
    out.corpus.total_duration_s += static_cast<double>(f.rows) * shift;
    out.corpus.features.push_back(std::move(f));
  }
  for (const Segment &s : out.corpus.segments) {
    int64_t u = out.corpus.segment_utterance[static_cast<size_t>(
        &s - out.corpus.segments.data())];
    out.corpus.segment_features.push_back(
        out.corpus.features[static_cast<size_t>(u)].slice_rows(s.start_frame, s.end_frame));
  }

  FeatureMatrix sil(static_cast<int64_t>(silence_rows.size()), dims);
  sil.frame_shift = shift;
  sil.frame_len = flen;
  for (size_t r = 0; r < silence_rows.size(); ++r)
    std::copy(silence_rows[r].begin(), silence_rows[r].end(), sil.row(static_cast<int64_t>(r)));
  out.corpus.silence_frames = std::move(sil);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic audio corpora
// ---------------------------------------------------------------------------

struct AudioCorpus {
  std::string manifest_path;
  std::vector<std::string> train_ids;
  std::vector<std::vector<int64_t>> token_truth;  // per train utterance, syllable types
  std::vector<std::vector<std::pair<double, double>>> spans_s;  // syllable spans, seconds
};

/// Writes WAV files plus a CSV manifest under `dir`.  Each syllable type is
/// an enveloped harmonic tone with its own carrier; the attack glides up to
/// the carrier so onsets differ spectrally from the steady middle.  Gaps and
/// edges sit near digital silence, far below the segmenter threshold.
inline AudioCorpus make_audio_corpus(Rng &rng, const TempDir &dir, int64_t n_types,
                                     int64_t n_train, int64_t syl_per_utt, int64_t n_test = 0,
                                     int sample_rate = 16000) {
  AudioCorpus out;
  std::ofstream manifest(dir.file("manifest.csv"));
  manifest << "utterance_id,path,split\n";

  auto synth_utt = [&](int64_t index, const std::string &split,
                       std::vector<int64_t> *types_out,
                       std::vector<std::pair<double, double>> *spans_out) {
    std::vector<float> samples;
    auto silence = [&](double dur) {
      int64_t n = static_cast<int64_t>(dur * sample_rate);
      for (int64_t i = 0; i < n; ++i)
        samples.push_back(static_cast<float>(4e-4 * (rng.uniform() - 0.5)));
    };
    silence(0.18);
    for (int64_t s = 0; s < syl_per_utt; ++s) {
      int64_t type = (index * syl_per_utt + s) % n_types;
      if (types_out) types_out->push_back(type);
      double f0 = 280.0 * static_cast<double>(type + 1) + 60.0 * static_cast<double>(type);
      double dur = 0.24 + 0.04 * rng.uniform();
      int64_t n = static_cast<int64_t>(dur * sample_rate);
      double t0 = static_cast<double>(samples.size()) / sample_rate;
      double phase = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        double pos = static_cast<double>(i) / static_cast<double>(n);
        double env = pos < 0.25 ? pos / 0.25 : (pos > 0.75 ? (1.0 - pos) / 0.25 : 1.0);
        double glide = pos < 0.25 ? 0.75 + 0.25 * (pos / 0.25) : 1.0;
        phase += 2.0 * M_PI * f0 * glide / sample_rate;
        double v = 0.35 * std::sin(phase) + 0.25 * std::sin(2.0 * phase) +
                   0.10 * std::sin(3.0 * phase);
        samples.push_back(static_cast<float>(env * v));
      }
      if (spans_out) spans_out->emplace_back(t0, t0 + dur);
      silence(0.14 + 0.04 * rng.uniform());
    }
    silence(0.18);

    char name[32];
    std::snprintf(name, sizeof(name), "%s%03d.wav", split == "test" ? "tst" : "utt",
                  static_cast<int>(index));
    Waveform w;
    w.samples = std::move(samples);
    w.sample_rate = sample_rate;
    write_wav(w, dir.file(name));
    std::string id(name, std::strlen(name) - 4);
    manifest << id << "," << name << "," << split << "\n";
    return id;
  };

  for (int64_t u = 0; u < n_train; ++u) {
    std::vector<int64_t> types;
    std::vector<std::pair<double, double>> spans;
    out.train_ids.push_back(synth_utt(u, "train_unit", &types, &spans));
    out.token_truth.push_back(std::move(types));
    out.spans_s.push_back(std::move(spans));
  }
  for (int64_t u = 0; u < n_test; ++u) synth_utt(u, "test", nullptr, nullptr);
  manifest.close();
  out.manifest_path = dir.file("manifest.csv");
  return out;
}

/// Reference intervals ({"utterance_id", "intervals": [{start_s, end_s,
/// label}]}) for the train utterances of an audio corpus; labels are "T<k>".
inline void write_reference_jsonl(const AudioCorpus &c, const std::string &path) {
  std::ofstream out(path);
  for (size_t u = 0; u < c.train_ids.size(); ++u) {
    out << "{\"utterance_id\":\"" << c.train_ids[u] << "\",\"intervals\":[";
    for (size_t s = 0; s < c.spans_s[u].size(); ++s) {
      if (s) out << ",";
      out << "{\"start_s\":" << c.spans_s[u][s].first
          << ",\"end_s\":" << c.spans_s[u][s].second << ",\"label\":\"T"
          << c.token_truth[u][s] << "\"}";
    }
    out << "]}\n";
  }
}

// ---------------------------------------------------------------------------
// Oracles: independent reimplementations used by the acceptance suite
// ---------------------------------------------------------------------------

/// Exhaustive-enumeration DTW: walks every monotone path from (0,0) to
/// (n-1,m-1), keeps the (cost, cells)-lexicographic minimum, and normalizes
/// by the path length in cells.
inline double dtw_oracle(const FeatureMatrix &a, const FeatureMatrix &b) {
  const int64_t n = a.rows, m = b.rows;
  std::vector<double> local(static_cast<size_t>(n * m));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int64_t d = 0; d < a.cols; ++d) {
        double diff = a.at(i, d) - b.at(j, d);
        acc += diff * diff;
      }
      local[static_cast<size_t>(i * m + j)] = std::sqrt(acc);
    }

  double best_cost = std::numeric_limits<double>::infinity();
  int64_t best_cells = std::numeric_limits<int64_t>::max();
  std::function<void(int64_t, int64_t, double, int64_t)> go = [&](int64_t i, int64_t j,
                                                                  double cost, int64_t cells) {
    cost += local[static_cast<size_t>(i * m + j)];
    ++cells;
    if (i == n - 1 && j == m - 1) {
      if (cost < best_cost || (cost == best_cost && cells < best_cells)) {
        best_cost = cost;
        best_cells = cells;
      }
      return;
    }
    if (i + 1 < n && j + 1 < m) go(i + 1, j + 1, cost, cells);
    if (i + 1 < n) go(i + 1, j, cost, cells);
    if (j + 1 < m) go(i, j + 1, cost, cells);
  };
  go(0, 0, 0.0, 0);
  return best_cost / static_cast<double>(best_cells);
}

/// BFS-reachability partition with the same normalization as
/// connected_components (dense ids in order of smallest member).
inline Clustering components_oracle(const NeighborGraph &g) {
  std::vector<std::vector<int64_t>> adj(static_cast<size_t>(g.n));
  for (const auto &[i, j] : g.edges) {
    adj[static_cast<size_t>(i)].push_back(j);
    adj[static_cast<size_t>(j)].push_back(i);
  }
  Clustering c;
  c.assignment.assign(static_cast<size_t>(g.n), -1);
  for (int64_t seed = 0; seed < g.n; ++seed) {
    if (c.assignment[static_cast<size_t>(seed)] >= 0) continue;
    int64_t id = c.size();
    c.clusters.emplace_back();
    std::vector<int64_t> queue{seed};
    c.assignment[static_cast<size_t>(seed)] = id;
    while (!queue.empty()) {
      int64_t node = queue.back();
      queue.pop_back();
      c.clusters[static_cast<size_t>(id)].push_back(node);
      for (int64_t next : adj[static_cast<size_t>(node)]) {
        if (c.assignment[static_cast<size_t>(next)] >= 0) continue;
        c.assignment[static_cast<size_t>(next)] = id;
        queue.push_back(next);
      }
    }
    std::sort(c.clusters[static_cast<size_t>(id)].begin(),
              c.clusters[static_cast<size_t>(id)].end());
  }
  return c;
}

/// Brute-force unit-loop decode score for single-state inventories under the
/// free grammar: enumerates every units^T frame labeling; at a same-label
/// boundary the better of staying (self-loop) or exiting and re-entering
/// (advance + insertion penalty) is taken, which covers every state path.
inline double decode_oracle_single_state(const UnitInventory &inv, const FeatureMatrix &f,
                                         double insertion_penalty) {
  const int64_t T = f.rows;
  const int64_t U = static_cast<int64_t>(inv.units.size());
  std::vector<double> emis(static_cast<size_t>(U * T));
  std::vector<double> lself(static_cast<size_t>(U)), ladv(static_cast<size_t>(U));
  for (int64_t u = 0; u < U; ++u) {
    for (int64_t t = 0; t < T; ++t)
      emis[static_cast<size_t>(u * T + t)] =
          log_emission(inv.units[static_cast<size_t>(u)].states[0], f.row(t), f.cols);
    double s = inv.units[static_cast<size_t>(u)].self_loop[0];
    lself[static_cast<size_t>(u)] = std::log(s);
    ladv[static_cast<size_t>(u)] = std::log(1.0 - s);
  }

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int64_t> lab(static_cast<size_t>(T), 0);
  while (true) {
    double score = insertion_penalty + emis[static_cast<size_t>(lab[0] * T)];
    for (int64_t t = 1; t < T; ++t) {
      int64_t u = lab[static_cast<size_t>(t - 1)], v = lab[static_cast<size_t>(t)];
      if (u != v)
        score += ladv[static_cast<size_t>(u)] + insertion_penalty;
      else
        score += std::max(lself[static_cast<size_t>(u)],
                          ladv[static_cast<size_t>(u)] + insertion_penalty);
      score += emis[static_cast<size_t>(v * T + t)];
    }
    best = std::max(best, score);

    int64_t pos = 0;  // odometer over labelings
    while (pos < T && ++lab[static_cast<size_t>(pos)] == U) lab[static_cast<size_t>(pos++)] = 0;
    if (pos == T) break;
  }
  return best;
}

/// Random single-state inventory for the decode oracle.
inline UnitInventory random_single_state_inventory(Rng &rng, int64_t dims, int64_t n_units) {
  UnitInventory inv;
  inv.feature_dim = dims;
  inv.variance_floor.assign(static_cast<size_t>(dims), 1e-6);
  for (int64_t u = 0; u < n_units; ++u) {
    HmmUnit unit;
    unit.label = "u" + std::to_string(u);
    unit.kind = UnitKind::kTransient;
    GaussianMixture g;
    g.dim = dims;
    int64_t comps = 1 + static_cast<int64_t>(rng.below(2));
    for (int64_t m = 0; m < comps; ++m) {
      g.weights.push_back(1.0 / static_cast<double>(comps));
      for (int64_t d = 0; d < dims; ++d) {
        g.means.push_back(4.0 * rng.uniform() - 2.0);
        g.variances.push_back(0.3 + 1.2 * rng.uniform());
      }
    }
    unit.states.push_back(std::move(g));
    unit.self_loop.push_back(0.1 + 0.8 * rng.uniform());
    inv.units.push_back(std::move(unit));
  }
  return inv;
}

/// Random feature block with entries in [-2.5, 2.5].
inline FeatureMatrix random_features(Rng &rng, int64_t rows, int64_t cols,
                                     double frame_shift = 0.01) {
  FeatureMatrix f(rows, cols);
  f.frame_shift = frame_shift;
  f.frame_len = 0.025;
  for (double &v : f.data) v = 5.0 * rng.uniform() - 2.5;
  return f;
}

/// 1 - edit distance / reference length, pooled over utterances.
inline double token_accuracy(const std::vector<std::vector<std::string>> &hyp,
                             const std::vector<std::vector<std::string>> &ref) {
  int64_t edits = 0, len = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    edits += edit_distance(hyp[i], ref[i]);
    len += static_cast<int64_t>(ref[i].size());
  }
  return len > 0 ? 1.0 - static_cast<double>(edits) / static_cast<double>(len) : 0.0;
}

}  // namespace testing
}  // namespace audkit

#endif  // AUDKIT_TESTS_TESTUTIL_H_
