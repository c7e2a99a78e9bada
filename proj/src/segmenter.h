// src/segmenter.h
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

#ifndef AUDKIT_SEGMENTER_H_
#define AUDKIT_SEGMENTER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "frontend.h"
#include "matrix.h"

namespace audkit {

/// Syllable-like span of an utterance, frame indexed, end exclusive.
struct Segment {
  std::string utterance_id;
  int64_t start_frame = 0;
  int64_t end_frame = 0;   // exclusive
  int64_t peak_frame = 0;  // argmax of the smoothed energy inside the span
};

struct SegmenterConfig {
  double min_seg_dur = 0.08;    // seconds
  double max_seg_dur = 0.60;    // seconds
  double valley_depth = 3.0;    // dB a valley must drop below both flanking peaks
  double silence_margin = 6.0;  // dB above the contour floor to count as speech

  void validate() const;
};

/// Segments one utterance into syllable-like spans by peak/valley analysis of
/// the smoothed energy contour.
///
/// Frames at or below floor + silence_margin are silence and belong to no
/// segment.  Within each voiced run, adjacent peaks whose intervening valley
/// does not drop at least valley_depth below the lower peak are merged
/// (keeping the higher peak).  Segments run valley-to-valley, clamped to the
/// run edges.  Too-short segments are merged into the neighbor behind the
/// lower valley (ties go left) or dropped when isolated; too-long segments
/// are split at their deepest interior valley.
std::vector<Segment> segment_syllables(const EnergyContour &e, const SegmenterConfig &cfg,
                                       const std::string &utterance_id = "");

/// Copies the frame rows [start_frame, end_frame) of `f`.
/// Throws OutOfRange when the span does not fit inside f.
FeatureMatrix extract_segment_features(const FeatureMatrix &f, const Segment &s);

}  // namespace audkit

#endif  // AUDKIT_SEGMENTER_H_
