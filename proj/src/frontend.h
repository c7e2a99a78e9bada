// src/frontend.h
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

#ifndef AUDKIT_FRONTEND_H_
#define AUDKIT_FRONTEND_H_

#include <cstdint>
#include <vector>

#include "matrix.h"
#include "wave.h"

namespace audkit {

struct FrontendConfig {
  double frame_len = 0.025;    // seconds
  double frame_shift = 0.010;  // seconds
  int n_mels = 40;
  int n_cepstra = 13;
  double preemphasis = 0.97;
  bool use_deltas = true;
  bool cmvn = true;            // per-utterance mean subtraction
  bool cmvn_var = false;       // also normalize per-dimension variance to 1
  double energy_smooth_win = 0.050;  // seconds, moving-average window
  double energy_floor_db = -60.0;    // relative to full scale

  void validate() const;

  int frame_len_samples(int sample_rate) const;
  int frame_shift_samples(int sample_rate) const;
  int feature_dim() const { return n_cepstra * (use_deltas ? 2 : 1); }
};

/// Per-frame smoothed log short-time energy in dB, floored at `floor_db`.
/// Shares the frame grid of compute_mfcc for the same waveform/config.
struct EnergyContour {
  std::vector<double> values_db;
  double frame_shift = 0.0;
  double floor_db = 0.0;
};

/// Number of length-L frames at shift S that fit into n samples (0 when
/// n < L; callers that require at least one frame must check separately).
int64_t frame_count(int64_t num_samples, int frame_len_samples, int frame_shift_samples);

/// MFCCs with optional deltas and per-utterance CMVN. T x D with
/// T = floor((N - L) / S) + 1 and D = n_cepstra * (1 + use_deltas).
/// Throws TooShort when the waveform is shorter than one frame.
FeatureMatrix compute_mfcc(const Waveform &w, const FrontendConfig &cfg);

/// In-place mean subtraction over the rows of `feats` (plus unit-variance
/// scaling when `normalize_variance`); the CMVN step of compute_mfcc.
void apply_cmvn(FeatureMatrix &feats, bool normalize_variance);

/// Per-dimension feature moments pooled over a corpus.  Freezing these at
/// training time lets standalone clips (e.g. stored unit exemplars) be
/// normalized into the same space the models were trained in, where
/// per-clip statistics would be meaningless.
struct FeatureStats {
  int64_t frames = 0;
  std::vector<double> sum;     // per dimension
  std::vector<double> sum_sq;  // per dimension

  bool empty() const { return frames == 0; }
  void accumulate(const FeatureMatrix &raw);
  /// Subtract the pooled mean (and scale to unit variance when
  /// `normalize_variance`), mirroring apply_cmvn with frozen statistics.
  void apply(FeatureMatrix &feats, bool normalize_variance) const;
};

/// Smoothed, floored log energy on the same frame grid as compute_mfcc.
EnergyContour compute_energy_contour(const Waveform &w, const FrontendConfig &cfg);

}  // namespace audkit

#endif  // AUDKIT_FRONTEND_H_
