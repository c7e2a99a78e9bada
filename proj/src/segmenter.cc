// src/segmenter.cc
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

#include "segmenter.h"

#include <algorithm>
#include <cmath>

namespace audkit {

namespace {

struct Span {
  int64_t start, end;  // [start, end)
};

int64_t argmax_in(const std::vector<double> &v, int64_t lo, int64_t hi) {
  int64_t best = lo;
  for (int64_t t = lo + 1; t < hi; ++t)
    if (v[static_cast<size_t>(t)] > v[static_cast<size_t>(best)]) best = t;
  return best;
}

int64_t argmin_in(const std::vector<double> &v, int64_t lo, int64_t hi) {
  int64_t best = lo;
  for (int64_t t = lo + 1; t < hi; ++t)
    if (v[static_cast<size_t>(t)] < v[static_cast<size_t>(best)]) best = t;
  return best;
}

// Local maxima inside [lo, hi); a plateau counts once, at its left edge.
std::vector<int64_t> find_peaks(const std::vector<double> &v, int64_t lo, int64_t hi) {
  std::vector<int64_t> peaks;
  int64_t t = lo;
  while (t < hi) {
    int64_t j = t;
    while (j + 1 < hi && v[static_cast<size_t>(j + 1)] == v[static_cast<size_t>(t)]) ++j;
    bool rises_left = (t == lo) || v[static_cast<size_t>(t)] > v[static_cast<size_t>(t - 1)];
    bool falls_right = (j == hi - 1) || v[static_cast<size_t>(t)] > v[static_cast<size_t>(j + 1)];
    if (rises_left && falls_right) peaks.push_back(t);
    t = j + 1;
  }
  return peaks;
}

// Collapse peaks whose separating valley is too shallow, always removing the
// globally weakest boundary first so that the result does not depend on scan
// order.  The survivor of a merge is the higher peak; ties keep the left one.
void merge_shallow_peaks(const std::vector<double> &v, double valley_depth,
                         std::vector<int64_t> &peaks) {
  while (peaks.size() > 1) {
    double worst_gap = 0.0;
    size_t worst = peaks.size();
    for (size_t i = 0; i + 1 < peaks.size(); ++i) {
      int64_t valley = argmin_in(v, peaks[i], peaks[i + 1] + 1);
      double gap = std::min(v[static_cast<size_t>(peaks[i])],
                            v[static_cast<size_t>(peaks[i + 1])]) -
                   v[static_cast<size_t>(valley)];
      if (worst == peaks.size() || gap < worst_gap) {
        worst_gap = gap;
        worst = i;
      }
    }
    if (worst == peaks.size() || worst_gap >= valley_depth) break;
    bool keep_left = v[static_cast<size_t>(peaks[worst])] >=
                     v[static_cast<size_t>(peaks[worst + 1])];
    peaks.erase(peaks.begin() + static_cast<int64_t>(worst) + (keep_left ? 1 : 0));
  }
}

// Shortest sub-minimum span merges into the neighbor behind the lower
// boundary valley (ties go left); spans alone in their run are dropped.
void repair_short(const std::vector<double> &v, int64_t min_frames, std::vector<Span> &spans) {
  for (;;) {
    size_t pick = spans.size();
    for (size_t i = 0; i < spans.size(); ++i) {
      int64_t len = spans[i].end - spans[i].start;
      if (len >= min_frames) continue;
      if (pick == spans.size() || len < spans[pick].end - spans[pick].start) pick = i;
    }
    if (pick == spans.size()) return;
    bool has_left = pick > 0 && spans[pick - 1].end == spans[pick].start;
    bool has_right = pick + 1 < spans.size() && spans[pick].end == spans[pick + 1].start;
    if (!has_left && !has_right) {
      spans.erase(spans.begin() + static_cast<int64_t>(pick));
      continue;
    }
    bool to_left;
    if (has_left && has_right) {
      to_left = v[static_cast<size_t>(spans[pick].start)] <=
                v[static_cast<size_t>(spans[pick].end)];
    } else {
      to_left = has_left;
    }
    if (to_left) {
      spans[pick - 1].end = spans[pick].end;
      spans.erase(spans.begin() + static_cast<int64_t>(pick));
    } else {
      spans[pick + 1].start = spans[pick].start;
      spans.erase(spans.begin() + static_cast<int64_t>(pick));
    }
  }
}

// Over-long spans split at the deepest valley that keeps both halves legal.
void split_long(const std::vector<double> &v, int64_t min_frames, int64_t max_frames,
                std::vector<Span> &spans) {
  for (size_t i = 0; i < spans.size();) {
    int64_t len = spans[i].end - spans[i].start;
    if (len <= max_frames || len < 2 * min_frames + 1) {
      ++i;
      continue;
    }
    int64_t cut = argmin_in(v, spans[i].start + min_frames, spans[i].end - min_frames + 1);
    Span right{cut, spans[i].end};
    spans[i].end = cut;
    spans.insert(spans.begin() + static_cast<int64_t>(i) + 1, right);
    // Re-examine the left half; the right half follows on a later pass.
  }
}

}  // namespace

void SegmenterConfig::validate() const {
  require(min_seg_dur > 0.0, Status::kInvalidConfig, "min_seg_dur must be > 0");
  require(max_seg_dur >= 2.0 * min_seg_dur, Status::kInvalidConfig,
          "max_seg_dur must be at least twice min_seg_dur so long spans stay splittable, got min=",
          min_seg_dur, " max=", max_seg_dur);
  require(valley_depth >= 0.0, Status::kInvalidConfig, "valley_depth must be >= 0");
  require(silence_margin >= 0.0, Status::kInvalidConfig, "silence_margin must be >= 0");
}

std::vector<Segment> segment_syllables(const EnergyContour &e, const SegmenterConfig &cfg,
                                       const std::string &utterance_id) {
  cfg.validate();
  require(e.frame_shift > 0.0, Status::kInvalidArgument, "energy contour has no frame shift");
  const auto &v = e.values_db;
  const int64_t t_max = static_cast<int64_t>(v.size());
  const double threshold = e.floor_db + cfg.silence_margin;
  const int64_t min_frames =
      std::max<int64_t>(1, static_cast<int64_t>(std::ceil(cfg.min_seg_dur / e.frame_shift - 1e-9)));
  const int64_t max_frames =
      std::max<int64_t>(min_frames,
                        static_cast<int64_t>(std::floor(cfg.max_seg_dur / e.frame_shift + 1e-9)));

  std::vector<Span> spans;
  int64_t t = 0;
  while (t < t_max) {
    if (v[static_cast<size_t>(t)] <= threshold) {
      ++t;
      continue;
    }
    int64_t run_end = t;
    while (run_end < t_max && v[static_cast<size_t>(run_end)] > threshold) ++run_end;

    auto peaks = find_peaks(v, t, run_end);
    if (peaks.empty()) peaks.push_back(argmax_in(v, t, run_end));
    merge_shallow_peaks(v, cfg.valley_depth, peaks);

    // Valley-to-valley spans, clamped to the run edges.
    std::vector<int64_t> bounds;
    bounds.push_back(t);
    for (size_t i = 0; i + 1 < peaks.size(); ++i)
      bounds.push_back(argmin_in(v, peaks[i], peaks[i + 1] + 1));
    bounds.push_back(run_end);
    std::vector<Span> run_spans;
    for (size_t i = 0; i + 1 < bounds.size(); ++i)
      if (bounds[i] < bounds[i + 1]) run_spans.push_back(Span{bounds[i], bounds[i + 1]});

    repair_short(v, min_frames, run_spans);
    split_long(v, min_frames, max_frames, run_spans);
    spans.insert(spans.end(), run_spans.begin(), run_spans.end());
    t = run_end;
  }

  std::vector<Segment> out;
  out.reserve(spans.size());
  for (const auto &s : spans) {
    Segment seg;
    seg.utterance_id = utterance_id;
    seg.start_frame = s.start;
    seg.end_frame = s.end;
    seg.peak_frame = argmax_in(v, s.start, s.end);
    out.push_back(std::move(seg));
  }
  return out;
}

FeatureMatrix extract_segment_features(const FeatureMatrix &f, const Segment &s) {
  require(s.start_frame >= 0 && s.start_frame < s.end_frame && s.end_frame <= f.rows,
          Status::kOutOfRange, "segment [", s.start_frame, ", ", s.end_frame,
          ") does not fit a ", f.rows, "-frame sequence");
  return f.slice_rows(s.start_frame, s.end_frame);
}

}  // namespace audkit
