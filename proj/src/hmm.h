// src/hmm.h
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

#ifndef AUDKIT_HMM_H_
#define AUDKIT_HMM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.h"

namespace audkit {

/// Diagonal-covariance Gaussian mixture over D-dimensional frames.
struct GaussianMixture {
  int64_t dim = 0;
  std::vector<double> weights;    // M, on the simplex
  std::vector<double> means;      // M x D, row-major
  std::vector<double> variances;  // M x D, each >= the inventory floor

  int64_t num_components() const { return static_cast<int64_t>(weights.size()); }
  const double *mean(int64_t m) const { return means.data() + m * dim; }
  const double *variance(int64_t m) const { return variances.data() + m * dim; }
};

/// log sum_m w_m N(frame; mu_m, sigma^2_m), via log-sum-exp.
double log_emission(const GaussianMixture &g, const double *frame, int64_t dim);

enum class UnitKind { kOnset, kRhyme, kOffset, kSilence, kTransient, kSteady };
const char *unit_kind_name(UnitKind k);
UnitKind unit_kind_from_name(const std::string &name);

/// Left-to-right, no-skip HMM; state s either loops (self_loop[s]) or
/// advances to s+1 (from the last state: exits the unit).
struct HmmUnit {
  std::string label;
  UnitKind kind = UnitKind::kOnset;
  std::vector<GaussianMixture> states;
  std::vector<double> self_loop;  // per state; advance/exit prob = 1 - self_loop[s]

  int64_t num_states() const { return static_cast<int64_t>(states.size()); }
};

/// Training provenance carried with an inventory.
struct TrainMeta {
  std::string stage;
  int64_t iterations = 0;
  std::vector<double> log_likelihood;  // total LL after each alignment pass
  std::vector<std::string> notes;      // zero-occupancy flags, dropped inputs, ...
};

struct UnitInventory {
  int64_t feature_dim = 0;
  std::vector<double> variance_floor;  // per dimension, > 0
  std::vector<HmmUnit> units;          // label-unique, order defines tie-breaking
  TrainMeta meta;

  int64_t index_of(const std::string &label) const;  // -1 when absent
  const HmmUnit &unit(const std::string &label) const;  // throws UnknownLabel
};

struct AlignmentEntry {
  std::string label;
  int64_t state = 0;
  int64_t start_frame = 0;
  int64_t end_frame = 0;  // exclusive
};

/// State-level segmentation of one utterance; entries tile [0, T).  The
/// score is sum of frame log-emissions plus the T-1 inter-frame transition
/// log-probs (plus any insertion penalties a decode applied).
struct Alignment {
  std::vector<AlignmentEntry> entries;
  double total_log_likelihood = 0.0;
};

/// Builds one fresh unit per region label from syllable-like segments: each
/// segment is cut by `fractions` into regions, region frames are pooled, and
/// every state of that region's unit starts from the pooled mean/variance
/// (floored), one mixture component, 0.5/0.5 transitions.
struct FlatStartOptions {
  std::vector<double> fractions{0.2, 0.6, 0.2};
  std::vector<std::string> labels;  // one per region
  std::vector<UnitKind> kinds;      // one per region
  int64_t states_per_unit = 3;
  double variance_floor_scale = 1e-3;  // x global per-dimension variance
  std::vector<double> variance_floor;  // when non-empty, overrides the derived floor
};

/// variance_floor_scale x per-dimension variance pooled over `data`, with a
/// tiny absolute lower bound.
std::vector<double> compute_variance_floor(const std::vector<const FeatureMatrix *> &data,
                                           double scale);

/// True when a `frames`-long segment admits every region at least
/// states_per_unit frames under the given fractions.
bool flat_start_feasible(int64_t frames, const std::vector<double> &fractions,
                         int64_t states_per_unit);

/// Returns the units plus the per-dimension variance floor derived from the
/// pooled frames.  Throws SegmentTooShort when any region of any segment has
/// fewer frames than states_per_unit.
std::vector<HmmUnit> flat_start_units(const std::vector<const FeatureMatrix *> &segments,
                                      const FlatStartOptions &opt,
                                      std::vector<double> *variance_floor_out);

/// Forced alignment of `transcript` (a left-to-right chain of the named
/// units) against f.  Throws UnknownLabel / InfeasibleAlignment.
Alignment viterbi_align(const UnitInventory &inv, const FeatureMatrix &f,
                        const std::vector<std::string> &transcript);

struct DecodeOptions {
  std::vector<std::string> active;  // unit labels; empty means every unit
  double insertion_penalty = 0.0;   // added at every unit entry, t = 0 included
  bool sequence_constraint = false; // restrict which kind may follow which
};

/// Unit-loop decoding: any active unit may follow any active unit (subject
/// to the optional kind-successor constraint), each entry paying the
/// insertion penalty.  Ties break toward the unit listed first.
Alignment viterbi_decode(const UnitInventory &inv, const FeatureMatrix &f,
                         const DecodeOptions &opt);

struct AlignedUtterance {
  const FeatureMatrix *features = nullptr;
  const Alignment *alignment = nullptr;
};

struct ReestimateOptions {
  double transition_floor = 0.01;  // keep self/advance probs inside [floor, 1-floor]
  bool mixup = false;              // split components this round
  int64_t max_components = 4;
  int64_t min_frames_per_component = 10;
  int threads = 1;
};

/// Viterbi-style re-estimation: one EM step on each state's mixture over its
/// assigned frames, ML transitions from occupancy counts (floored), variance
/// floor from the inventory.  States with no frames keep their parameters
/// and are flagged in meta.notes.  Throws InconsistentAlignment.
UnitInventory reestimate(const UnitInventory &inv, const std::vector<AlignedUtterance> &data,
                         const ReestimateOptions &opt);

/// Recomputes an alignment's score from its entries (self-consistency
/// check); pass the penalty a decode used, 0 for forced alignments.
double rescore_alignment(const UnitInventory &inv, const FeatureMatrix &f, const Alignment &a,
                         double insertion_penalty = 0.0);

/// Versioned JSON round-trip for inventories.
std::string inventory_to_json(const UnitInventory &inv);
UnitInventory inventory_from_json(const std::string &text);
void save_inventory(const UnitInventory &inv, const std::string &path);
UnitInventory load_inventory(const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_HMM_H_
