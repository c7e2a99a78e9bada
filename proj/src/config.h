// src/config.h
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

#ifndef AUDKIT_CONFIG_H_
#define AUDKIT_CONFIG_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "frontend.h"
#include "segmenter.h"

namespace audkit {

/// Every knob of the discovery pipeline.  Serialized as a nested key-value
/// tree; absent keys keep their defaults.
struct PipelineConfig {
  FrontendConfig frontend;
  SegmenterConfig segmenter;

  // graph clustering
  int64_t knn_k = 5;
  int64_t min_cluster_size = 3;
  int64_t dtw_band = 0;  // 0 = unbanded

  // self-training
  int64_t stage1_max_iter = 20;
  int64_t stage2_max_iter = 10;
  double rel_ll_tol = 1e-4;
  int64_t states_per_unit = 3;
  std::vector<double> region_fractions{0.2, 0.6, 0.2};  // onset/rhyme/offset
  double variance_floor_scale = 1e-3;
  double transition_floor = 0.01;
  double insertion_penalty = 0.0;
  bool sequence_constraint = false;  // constrain decode to syllable-shaped orders
  std::vector<int64_t> mixup_iters;  // iterations (1-based) that split components
  int64_t max_components = 4;
  int64_t min_frames_per_component = 10;

  // merging
  int64_t merge_target = 40;
  bool merge_stratified = true;  // keep transient and steady units apart

  // exemplars / resynthesis
  int64_t exemplar_max_occurrences = 50;
  double crossfade = 0.01;  // seconds

  // evaluation
  std::string abx_distance = "dtw";  // or "label_edit"

  int64_t seed = 1;
  int threads = 1;

  void validate() const;
};

std::string config_to_json(const PipelineConfig &cfg);

/// Defaults overlaid with whatever keys the document provides; unknown keys
/// are rejected.
PipelineConfig config_from_json(const std::string &text);

PipelineConfig load_config(const std::string &path);
void save_config(const PipelineConfig &cfg, const std::string &path);

/// Applies one `section.key=value` override; the value is parsed as JSON
/// when possible (numbers, booleans, arrays) and as a string otherwise.
void apply_override(PipelineConfig &cfg, const std::string &dotted_key, const std::string &value);

/// Applies a batch of overrides, validating once at the end so values that
/// are only consistent in combination succeed.
PipelineConfig apply_overrides(const PipelineConfig &cfg,
                               const std::vector<std::pair<std::string, std::string>> &overrides);

/// FNV-1a of the canonical serialization, as fixed-width hex.
std::string config_hash(const PipelineConfig &cfg);

}  // namespace audkit

#endif  // AUDKIT_CONFIG_H_
