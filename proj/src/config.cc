// src/config.cc
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

#include "config.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace audkit {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown_keys(const Json &j, std::initializer_list<const char *> known,
                         const char *where) {
  for (const auto &[key, _] : j.items()) {
    bool ok = false;
    for (const char *k : known)
      if (key == k) ok = true;
    require(ok, Status::kInvalidConfig, "unknown config key \"", key, "\" in ", where);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  frontend.validate();
  segmenter.validate();
  require(knn_k >= 0, Status::kInvalidConfig, "knn_k must be >= 0");
  require(min_cluster_size >= 1, Status::kInvalidConfig, "min_cluster_size must be >= 1");
  require(dtw_band >= 0, Status::kInvalidConfig, "dtw_band must be >= 0");
  require(stage1_max_iter >= 1 && stage2_max_iter >= 1, Status::kInvalidConfig,
          "iteration counts must be >= 1");
  require(rel_ll_tol > 0.0, Status::kInvalidConfig, "rel_ll_tol must be > 0");
  require(states_per_unit >= 1, Status::kInvalidConfig, "states_per_unit must be >= 1");
  require(region_fractions.size() == 3, Status::kInvalidConfig,
          "region_fractions must have exactly 3 entries (onset/rhyme/offset)");
  require(variance_floor_scale > 0.0, Status::kInvalidConfig, "variance_floor_scale must be > 0");
  require(transition_floor > 0.0 && transition_floor < 0.5, Status::kInvalidConfig,
          "transition_floor must lie in (0, 0.5)");
  require(max_components >= 1, Status::kInvalidConfig, "max_components must be >= 1");
  require(min_frames_per_component >= 1, Status::kInvalidConfig,
          "min_frames_per_component must be >= 1");
  require(merge_target >= 1, Status::kInvalidConfig, "merge_target must be >= 1");
  require(exemplar_max_occurrences >= 1, Status::kInvalidConfig,
          "exemplar_max_occurrences must be >= 1");
  require(crossfade >= 0.0, Status::kInvalidConfig, "crossfade must be >= 0");
  require(abx_distance == "dtw" || abx_distance == "label_edit", Status::kInvalidConfig,
          "abx_distance must be \"dtw\" or \"label_edit\"");
  require(seed >= 0, Status::kInvalidConfig, "seed must be >= 0");
  require(threads >= 1, Status::kInvalidConfig, "threads must be >= 1");
}

std::string config_to_json(const PipelineConfig &cfg) {
  Json j;
  j["frontend"] = {{"frame_len", cfg.frontend.frame_len},
                   {"frame_shift", cfg.frontend.frame_shift},
                   {"n_mels", cfg.frontend.n_mels},
                   {"n_cepstra", cfg.frontend.n_cepstra},
                   {"preemphasis", cfg.frontend.preemphasis},
                   {"use_deltas", cfg.frontend.use_deltas},
                   {"cmvn", cfg.frontend.cmvn},
                   {"cmvn_var", cfg.frontend.cmvn_var},
                   {"energy_smooth_win", cfg.frontend.energy_smooth_win},
                   {"energy_floor_db", cfg.frontend.energy_floor_db}};
  j["segmenter"] = {{"min_seg_dur", cfg.segmenter.min_seg_dur},
                    {"max_seg_dur", cfg.segmenter.max_seg_dur},
                    {"valley_depth", cfg.segmenter.valley_depth},
                    {"silence_margin", cfg.segmenter.silence_margin}};
  j["knn_k"] = cfg.knn_k;
  j["min_cluster_size"] = cfg.min_cluster_size;
  j["dtw_band"] = cfg.dtw_band;
  j["stage1_max_iter"] = cfg.stage1_max_iter;
  j["stage2_max_iter"] = cfg.stage2_max_iter;
  j["rel_ll_tol"] = cfg.rel_ll_tol;
  j["states_per_unit"] = cfg.states_per_unit;
  j["region_fractions"] = cfg.region_fractions;
  j["variance_floor_scale"] = cfg.variance_floor_scale;
  j["transition_floor"] = cfg.transition_floor;
  j["insertion_penalty"] = cfg.insertion_penalty;
  j["sequence_constraint"] = cfg.sequence_constraint;
  j["mixup_iters"] = cfg.mixup_iters;
  j["max_components"] = cfg.max_components;
  j["min_frames_per_component"] = cfg.min_frames_per_component;
  j["merge_target"] = cfg.merge_target;
  j["merge_stratified"] = cfg.merge_stratified;
  j["exemplar_max_occurrences"] = cfg.exemplar_max_occurrences;
  j["crossfade"] = cfg.crossfade;
  j["abx_distance"] = cfg.abx_distance;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string &text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad config JSON: ", e.what());
  }
  PipelineConfig cfg;
  try {
    reject_unknown_keys(
        j,
        {"frontend", "segmenter", "knn_k", "min_cluster_size", "dtw_band", "stage1_max_iter",
         "stage2_max_iter", "rel_ll_tol", "states_per_unit", "region_fractions",
         "variance_floor_scale", "transition_floor", "insertion_penalty", "sequence_constraint",
         "mixup_iters", "max_components", "min_frames_per_component", "merge_target",
         "merge_stratified", "exemplar_max_occurrences", "crossfade", "abx_distance", "seed",
         "threads"},
        "config root");
    if (j.contains("frontend")) {
      const Json &f = j["frontend"];
      reject_unknown_keys(f,
                          {"frame_len", "frame_shift", "n_mels", "n_cepstra", "preemphasis",
                           "use_deltas", "cmvn", "cmvn_var", "energy_smooth_win",
                           "energy_floor_db"},
                          "frontend");
      cfg.frontend.frame_len = f.value("frame_len", cfg.frontend.frame_len);
      cfg.frontend.frame_shift = f.value("frame_shift", cfg.frontend.frame_shift);
      cfg.frontend.n_mels = f.value("n_mels", cfg.frontend.n_mels);
      cfg.frontend.n_cepstra = f.value("n_cepstra", cfg.frontend.n_cepstra);
      cfg.frontend.preemphasis = f.value("preemphasis", cfg.frontend.preemphasis);
      cfg.frontend.use_deltas = f.value("use_deltas", cfg.frontend.use_deltas);
      cfg.frontend.cmvn = f.value("cmvn", cfg.frontend.cmvn);
      cfg.frontend.cmvn_var = f.value("cmvn_var", cfg.frontend.cmvn_var);
      cfg.frontend.energy_smooth_win = f.value("energy_smooth_win", cfg.frontend.energy_smooth_win);
      cfg.frontend.energy_floor_db = f.value("energy_floor_db", cfg.frontend.energy_floor_db);
    }
    if (j.contains("segmenter")) {
      const Json &s = j["segmenter"];
      reject_unknown_keys(s, {"min_seg_dur", "max_seg_dur", "valley_depth", "silence_margin"},
                          "segmenter");
      cfg.segmenter.min_seg_dur = s.value("min_seg_dur", cfg.segmenter.min_seg_dur);
      cfg.segmenter.max_seg_dur = s.value("max_seg_dur", cfg.segmenter.max_seg_dur);
      cfg.segmenter.valley_depth = s.value("valley_depth", cfg.segmenter.valley_depth);
      cfg.segmenter.silence_margin = s.value("silence_margin", cfg.segmenter.silence_margin);
    }
    cfg.knn_k = j.value("knn_k", cfg.knn_k);
    cfg.min_cluster_size = j.value("min_cluster_size", cfg.min_cluster_size);
    cfg.dtw_band = j.value("dtw_band", cfg.dtw_band);
    cfg.stage1_max_iter = j.value("stage1_max_iter", cfg.stage1_max_iter);
    cfg.stage2_max_iter = j.value("stage2_max_iter", cfg.stage2_max_iter);
    cfg.rel_ll_tol = j.value("rel_ll_tol", cfg.rel_ll_tol);
    cfg.states_per_unit = j.value("states_per_unit", cfg.states_per_unit);
    cfg.region_fractions = j.value("region_fractions", cfg.region_fractions);
    cfg.variance_floor_scale = j.value("variance_floor_scale", cfg.variance_floor_scale);
    cfg.transition_floor = j.value("transition_floor", cfg.transition_floor);
    cfg.insertion_penalty = j.value("insertion_penalty", cfg.insertion_penalty);
    cfg.sequence_constraint = j.value("sequence_constraint", cfg.sequence_constraint);
    cfg.mixup_iters = j.value("mixup_iters", cfg.mixup_iters);
    cfg.max_components = j.value("max_components", cfg.max_components);
    cfg.min_frames_per_component = j.value("min_frames_per_component", cfg.min_frames_per_component);
    cfg.merge_target = j.value("merge_target", cfg.merge_target);
    cfg.merge_stratified = j.value("merge_stratified", cfg.merge_stratified);
    cfg.exemplar_max_occurrences = j.value("exemplar_max_occurrences", cfg.exemplar_max_occurrences);
    cfg.crossfade = j.value("crossfade", cfg.crossfade);
    cfg.abx_distance = j.value("abx_distance", cfg.abx_distance);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kInvalidConfig, "bad config value: ", e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::kNotFound, "cannot open config ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const PipelineConfig &cfg, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::kIoError, "cannot write ", path);
  out << config_to_json(cfg);
  require(out.good(), Status::kIoError, "short write to ", path);
}

namespace {

void set_json_key(Json &j, const std::string &dotted_key, const std::string &value) {
  Json *node = &j;
  std::string rest = dotted_key, part;
  for (;;) {
    size_t dot = rest.find('.');
    part = rest.substr(0, dot);
    require(node->is_object() && node->contains(part), Status::kInvalidConfig,
            "unknown config key \"", dotted_key, "\"");
    if (dot == std::string::npos) break;
    node = &(*node)[part];
    rest = rest.substr(dot + 1);
  }
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const nlohmann::json::exception &) {
    parsed = value;  // bare words are strings
  }
  (*node)[part] = parsed;
}

}  // namespace

void apply_override(PipelineConfig &cfg, const std::string &dotted_key, const std::string &value) {
  Json j = Json::parse(config_to_json(cfg));
  set_json_key(j, dotted_key, value);
  cfg = config_from_json(j.dump());
}

PipelineConfig apply_overrides(const PipelineConfig &cfg,
                               const std::vector<std::pair<std::string, std::string>> &overrides) {
  Json j = Json::parse(config_to_json(cfg));
  for (const auto &kv : overrides) set_json_key(j, kv.first, kv.second);
  return config_from_json(j.dump());
}

std::string config_hash(const PipelineConfig &cfg) {
  return to_hex(fnv1a64(config_to_json(cfg)));
}

}  // namespace audkit
