// src/pipeline.h
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

#ifndef AUDKIT_PIPELINE_H_
#define AUDKIT_PIPELINE_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "config.h"
#include "frontend.h"
#include "graph.h"
#include "hmm.h"
#include "manifest.h"
#include "metrics.h"
#include "rng.h"
#include "segmenter.h"
#include "transcription.h"
#include "wave.h"

namespace audkit {

inline constexpr const char *kSilenceLabel = "SIL";

/// Frontend products for one corpus split, in manifest order.
struct AnalyzedCorpus {
  std::vector<std::string> ids;
  std::vector<Waveform> waves;
  std::vector<FeatureMatrix> features;
  std::vector<Segment> segments;            // all utterances, utterance-major order
  std::vector<int64_t> segment_utterance;   // segment -> utterance index
  std::vector<FeatureMatrix> segment_features;
  FeatureMatrix silence_frames;             // pooled frames outside every segment
  FeatureStats feature_stats;               // pre-CMVN moments over the split
  double total_duration_s = 0.0;
};

AnalyzedCorpus analyze_corpus(const std::vector<ManifestEntry> &entries,
                              const PipelineConfig &cfg);

/// The usable slice of a clustering for stage-1 training: per-cluster units
/// exist only where enough segments survive the flat-start feasibility cut.
struct Stage1Plan {
  std::vector<int64_t> segment_index;                 // into the corpus segment list
  std::vector<std::vector<std::string>> transcripts;  // parallel; onset/rhyme/offset labels
  std::vector<int64_t> cluster_ids;                   // usable cluster ids, ascending
  std::vector<std::string> notes;                     // what was dropped and why
};

Stage1Plan plan_stage1(const Clustering &clusters,
                       const std::vector<FeatureMatrix> &segment_features,
                       const PipelineConfig &cfg);

/// Fixed-transcript self-training: {align; re-estimate} until the relative
/// total-log-likelihood change drops to rel_ll_tol or max_iter, then one
/// final alignment pass whose LL is appended to the trajectory.
UnitInventory selftrain_forced(UnitInventory inv,
                               const std::vector<const FeatureMatrix *> &segments,
                               const std::vector<std::vector<std::string>> &transcripts,
                               const PipelineConfig &cfg, int64_t max_iter,
                               const std::string &stage_name,
                               std::vector<Alignment> *final_alignments = nullptr);

/// Unit-loop self-training: {decode; re-estimate} with every unit active.
UnitInventory selftrain_decode(UnitInventory inv, const std::vector<FeatureMatrix> &utterances,
                               const PipelineConfig &cfg, int64_t max_iter,
                               const std::string &stage_name,
                               std::vector<Alignment> *final_alignments = nullptr);

/// Flat-starts one onset/rhyme/offset unit triple per usable cluster (labels
/// OS_i / RH_i / OF_i) plus a silence unit, then self-trains on the
/// cluster-fixed transcripts.  Throws NoUsableClusters.
UnitInventory stage1_train(const Clustering &clusters, const AnalyzedCorpus &corpus,
                           const PipelineConfig &cfg,
                           std::vector<Alignment> *final_alignments = nullptr,
                           Stage1Plan *plan_out = nullptr);

/// Re-organizes a stage-1 inventory on continuous utterances (System 1).
/// Throws EmptyCorpus.
UnitInventory stage2_train(const UnitInventory &inv,
                           const std::vector<FeatureMatrix> &utterances,
                           const PipelineConfig &cfg,
                           std::vector<Alignment> *final_alignments = nullptr);

struct MergeResult {
  UnitInventory inventory;
  std::map<std::string, std::string> label_map;  // every old label, silence included
};

/// Groups units into `target` merged units by k-means over occupancy-
/// weighted state-mean embeddings (transient and steady kinds stratified
/// unless disabled); silence passes through.  target at or above the current
/// non-silence count returns the inventory unchanged with an identity map.
MergeResult merge_units(const UnitInventory &inv, int64_t target, const PipelineConfig &cfg,
                        Rng &rng);

/// Unit-level view of a state alignment: one token per unit occurrence.
Transcription transcription_from_alignment(const std::string &utterance_id, const Alignment &a,
                                           double frame_shift);

std::string alignment_to_json(const std::string &utterance_id, const Alignment &a,
                              double frame_shift);

Transcription encode_features(const UnitInventory &inv, const FeatureMatrix &f,
                              const PipelineConfig &cfg, const std::string &utterance_id);

/// Frontend + unit-loop decode.  When `stats` is given and CMVN is on, the
/// input is normalized with the frozen training statistics instead of its
/// own: a clip of a few frames carries no usable statistics of its own.
Transcription encode_waveform(const UnitInventory &inv, const Waveform &w,
                              const PipelineConfig &cfg, const std::string &utterance_id,
                              const FeatureStats *stats = nullptr);

void save_feature_stats(const FeatureStats &stats, const std::string &path);
FeatureStats load_feature_stats(const std::string &path);

/// Medoid waveform snippet per unit, for concatenative resynthesis.
struct ExemplarStore {
  int sample_rate = 0;
  std::vector<std::pair<std::string, Waveform>> exemplars;  // inventory order
  std::vector<std::string> missing;                         // units never decoded

  const Waveform *find(const std::string &label) const;
};

/// Picks each unit's exemplar as the DTW medoid of up to
/// cfg.exemplar_max_occurrences sampled occurrences in `alignments`.
/// Silence gets no exemplar (it is rendered as digital silence).
ExemplarStore build_exemplar_store(const UnitInventory &inv,
                                   const std::vector<FeatureMatrix> &features,
                                   const std::vector<Waveform> &waves,
                                   const std::vector<Alignment> &alignments,
                                   const PipelineConfig &cfg, Rng &rng);

/// Concatenates exemplars along the transcription with a linear crossfade;
/// output length = sum of piece lengths minus one crossfade per junction.
/// Throws UnknownUnit for labels without an exemplar.
Waveform decode_exemplar(const ExemplarStore &store, const Transcription &t, double crossfade_s);

void save_exemplar_store(const ExemplarStore &store, const std::string &dir);
ExemplarStore load_exemplar_store(const std::string &dir);

// ---------------------------------------------------------------------------
// Model-directory commands (the CLI surface).  Every command resolves its
// configuration as: model config (or defaults) + explicit overrides, and
// reports errors via Error.
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string model_dir;
  std::string manifest_path;
  std::string config_path;  // discover only; optional
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Full front-to-back discovery: frontend, segmentation, DTW graph
/// clustering, stage-1 + stage-2 training, exemplars, run metadata.
void run_discover(const RunOptions &opt);

/// Re-runs stage-2 self-training from the stored stage-1 inventory.
void run_train_stage2(const RunOptions &opt);

struct MergeRunOptions {
  std::string model_dir;
  std::string manifest_path;
  int64_t target = -1;  // -1: use the stored config's merge_target
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Merges the System-1 inventory and repeats both training stages with the
/// mapped labels (System 2).
void run_merge(const MergeRunOptions &opt);

struct EncodeRunOptions {
  std::string model_dir;
  std::string wav_path;       // single-file mode
  std::string manifest_path;  // batch mode (exactly one of the two)
  std::string split = "test";
  int system = 1;  // 1 = stage-2 inventory, 2 = merged inventory
  std::string output_path;    // optional for single-file; JSONL path for batch
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Returns a JSON summary (single file: transcription + bitrate; batch:
/// aggregate bitrate over the split).
std::string run_encode(const EncodeRunOptions &opt);

struct ResynthRunOptions {
  std::string model_dir;
  std::string transcription_path;  // JSON produced by encode
  std::string wav_path;            // or: encode this file first
  int system = 1;
  std::string output_wav;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void run_resynth(const ResynthRunOptions &opt);

struct EvalRunOptions {
  std::string model_dir;
  std::string manifest_path;
  std::string split = "test";
  int system = 1;
  std::string triplets_path;   // optional ABX triplet JSONL
  std::string reference_path;  // optional reference interval JSONL
  std::string output_json;     // defaults inside the model dir
  std::string output_csv;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Returns the metric report JSON (also written to disk).
std::string run_eval(const EvalRunOptions &opt);

}  // namespace audkit

#endif  // AUDKIT_PIPELINE_H_
