// src/pipeline.cc
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

#include "pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "common.h"
#include "dtw.h"
#include "frontend.h"
#include "json.hpp"
#include "textgrid.h"

namespace audkit {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string region_label(const char *prefix, int64_t cluster_id) {
  return std::string(prefix) + "_" + std::to_string(cluster_id);
}

bool iter_in(const std::vector<int64_t> &iters, int64_t iter) {
  return std::find(iters.begin(), iters.end(), iter) != iters.end();
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::kIoError, "cannot write ", path);
  out << text;
  out.flush();
  require(out.good(), Status::kIoError, "short write to ", path);
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::kNotFound, "cannot read ", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string safe_filename(const std::string &id) {
  std::string out;
  for (char c : id)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
               ? c
               : '_';
  return out.empty() ? "_" : out;
}

std::string mp(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

std::string inv_path(const std::string &dir, int system) {
  require(system == 1 || system == 2, Status::kInvalidArgument, "system must be 1 or 2");
  return mp(dir, system == 1 ? "inventory_stage2.json" : "inventory_system2.json");
}

std::string aligns_path(const std::string &dir, int system) {
  return mp(dir, system == 1 ? "alignments_stage2.jsonl" : "alignments_system2.jsonl");
}

std::string exemplars_dir(const std::string &dir, int system) {
  return mp(dir, system == 1 ? "exemplars" : "exemplars_system2");
}

std::string textgrids_dir(const std::string &dir, int system) {
  return mp(dir, system == 1 ? "textgrids" : "textgrids_system2");
}

PipelineConfig with_overrides(const PipelineConfig &cfg,
                              const std::vector<std::pair<std::string, std::string>> &kv) {
  return apply_overrides(cfg, kv);  // round-trips and validates once
}

PipelineConfig model_config(const std::string &model_dir,
                            const std::vector<std::pair<std::string, std::string>> &kv) {
  require(!model_dir.empty(), Status::kInvalidArgument, "model directory required");
  return with_overrides(load_config(mp(model_dir, "pipeline_config.json")), kv);
}

ordered_json load_run_meta(const std::string &path) {
  if (!fs::exists(path)) {
    ordered_json j;
    j["tool"] = "audkit";
    j["version"] = kVersion;
    return j;
  }
  try {
    return ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad run metadata ", path, ": ", e.what());
  }
}

ordered_json stage_json(const TrainMeta &m, const std::string &hash) {
  ordered_json j;
  j["config_hash"] = hash;
  j["iterations"] = m.iterations;
  j["log_likelihood"] = m.log_likelihood;
  j["notes"] = m.notes;
  return j;
}

ordered_json exemplar_json(const ExemplarStore &s) {
  ordered_json j;
  j["count"] = static_cast<int64_t>(s.exemplars.size());
  j["missing"] = s.missing;
  return j;
}

void write_textgrids(const std::string &dir, const AnalyzedCorpus &corpus,
                     const std::vector<Alignment> &aligns, double frame_shift) {
  fs::create_directories(dir);
  for (size_t i = 0; i < aligns.size(); ++i) {
    Transcription t = transcription_from_alignment(corpus.ids[i], aligns[i], frame_shift);
    TextGridTier units{"units", {}};
    for (const TranscriptionToken &tok : t.tokens)
      units.intervals.push_back(
          {tok.start_frame * frame_shift, tok.end_frame * frame_shift, tok.label});
    TextGridTier states{"states", {}};
    for (const AlignmentEntry &e : aligns[i].entries)
      states.intervals.push_back({e.start_frame * frame_shift, e.end_frame * frame_shift,
                                  e.label + ":" + std::to_string(e.state)});
    double xmax = corpus.waves[i].duration();
    if (!units.intervals.empty()) xmax = std::max(xmax, units.intervals.back().xmax);
    save_textgrid({units, states}, xmax, mp(dir, safe_filename(corpus.ids[i]) + ".TextGrid"));
  }
}

double dist2(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Lloyd's algorithm with k-means++ seeding.  Deterministic for a fixed Rng:
/// assignment ties keep the lowest center, empty centers are re-seated on the
/// farthest point of any multi-member cluster.
std::vector<int64_t> kmeans(const std::vector<std::vector<double>> &points, int64_t k, Rng &rng) {
  const int64_t n = static_cast<int64_t>(points.size());
  std::vector<int64_t> assign(static_cast<size_t>(n), 0);
  if (k >= n) {
    for (int64_t i = 0; i < n; ++i) assign[static_cast<size_t>(i)] = i;
    return assign;
  }
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<size_t>(k));
  centers.push_back(points[rng.below(static_cast<uint64_t>(n))]);
  std::vector<double> d2(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) d2[static_cast<size_t>(i)] = dist2(points[i], centers[0]);
  while (static_cast<int64_t>(centers.size()) < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    const size_t pick =
        total > 0.0 ? rng.discrete(d2) : static_cast<size_t>(rng.below(static_cast<uint64_t>(n)));
    centers.push_back(points[pick]);
    for (int64_t i = 0; i < n; ++i)
      d2[static_cast<size_t>(i)] = std::min(d2[static_cast<size_t>(i)],
                                            dist2(points[static_cast<size_t>(i)], centers.back()));
  }
  for (int round = 0; round < 100; ++round) {
    bool changed = false;
    for (int64_t i = 0; i < n; ++i) {
      int64_t best = 0;
      double bd = dist2(points[static_cast<size_t>(i)], centers[0]);
      for (int64_t c = 1; c < k; ++c) {
        const double d = dist2(points[static_cast<size_t>(i)], centers[static_cast<size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[static_cast<size_t>(i)] != best) {
        assign[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    std::vector<int64_t> count(static_cast<size_t>(k), 0);
    for (int64_t i = 0; i < n; ++i) ++count[static_cast<size_t>(assign[static_cast<size_t>(i)])];
    for (int64_t c = 0; c < k; ++c) {
      if (count[static_cast<size_t>(c)] > 0) continue;
      int64_t far = -1;
      double fd = -1.0;
      for (int64_t i = 0; i < n; ++i) {
        if (count[static_cast<size_t>(assign[static_cast<size_t>(i)])] <= 1) continue;
        const double d = dist2(points[static_cast<size_t>(i)],
                               centers[static_cast<size_t>(assign[static_cast<size_t>(i)])]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      if (far < 0) break;
      --count[static_cast<size_t>(assign[static_cast<size_t>(far)])];
      assign[static_cast<size_t>(far)] = c;
      count[static_cast<size_t>(c)] = 1;
      changed = true;
    }
    for (int64_t c = 0; c < k; ++c) {
      if (count[static_cast<size_t>(c)] == 0) continue;
      std::vector<double> mean(centers[static_cast<size_t>(c)].size(), 0.0);
      for (int64_t i = 0; i < n; ++i) {
        if (assign[static_cast<size_t>(i)] != c) continue;
        for (size_t d = 0; d < mean.size(); ++d) mean[d] += points[static_cast<size_t>(i)][d];
      }
      for (double &v : mean) v /= static_cast<double>(count[static_cast<size_t>(c)]);
      centers[static_cast<size_t>(c)] = std::move(mean);
    }
    if (!changed) break;
  }
  return assign;
}

struct RefInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
};

std::map<std::string, std::vector<RefInterval>> load_reference_intervals(
    const std::string &path) {
  std::map<std::string, std::vector<RefInterval>> refs;
  std::istringstream in(read_text_file(path));
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ordered_json j = ordered_json::parse(line);
      auto &dst = refs[j.at("utterance_id").get<std::string>()];
      for (const auto &iv : j.at("intervals"))
        dst.push_back({iv.at("start_s").get<double>(), iv.at("end_s").get<double>(),
                       iv.at("label").get<std::string>()});
    }
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad reference intervals ", path, ": ", e.what());
  }
  return refs;
}

}  // namespace

AnalyzedCorpus analyze_corpus(const std::vector<ManifestEntry> &entries,
                              const PipelineConfig &cfg) {
  require(!entries.empty(), Status::kEmptyCorpus, "no utterances to analyze");
  AnalyzedCorpus c;
  const int64_t n = static_cast<int64_t>(entries.size());
  c.ids.resize(static_cast<size_t>(n));
  c.waves.resize(static_cast<size_t>(n));
  c.features.resize(static_cast<size_t>(n));
  std::vector<std::vector<Segment>> segs(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    c.ids[static_cast<size_t>(i)] = entries[static_cast<size_t>(i)].utterance_id;
    c.waves[static_cast<size_t>(i)] = read_wav(entries[static_cast<size_t>(i)].path);
    c.total_duration_s += c.waves[static_cast<size_t>(i)].duration();
  }
  // Raw features first so corpus-level moments can be frozen, then the
  // regular per-utterance CMVN; together this equals compute_mfcc(cfg).
  FrontendConfig raw_cfg = cfg.frontend;
  raw_cfg.cmvn = false;
  parallel_for(n, cfg.threads, [&](int64_t i) {
    c.features[static_cast<size_t>(i)] = compute_mfcc(c.waves[static_cast<size_t>(i)], raw_cfg);
    EnergyContour e = compute_energy_contour(c.waves[static_cast<size_t>(i)], cfg.frontend);
    segs[static_cast<size_t>(i)] =
        segment_syllables(e, cfg.segmenter, c.ids[static_cast<size_t>(i)]);
  });
  for (int64_t i = 0; i < n; ++i) {
    c.feature_stats.accumulate(c.features[static_cast<size_t>(i)]);
    if (cfg.frontend.cmvn) apply_cmvn(c.features[static_cast<size_t>(i)], cfg.frontend.cmvn_var);
  }
  const int64_t dim = c.features[0].cols;
  std::vector<double> silence;
  int64_t silence_rows = 0;
  for (int64_t i = 0; i < n; ++i) {
    const FeatureMatrix &f = c.features[static_cast<size_t>(i)];
    int64_t cursor = 0;
    auto pool = [&](int64_t from, int64_t to) {
      for (int64_t t = from; t < to; ++t, ++silence_rows)
        silence.insert(silence.end(), f.row(t), f.row(t) + dim);
    };
    for (const Segment &s : segs[static_cast<size_t>(i)]) {
      pool(cursor, s.start_frame);
      cursor = s.end_frame;
      c.segment_utterance.push_back(i);
      c.segment_features.push_back(extract_segment_features(f, s));
      c.segments.push_back(s);
    }
    pool(cursor, f.rows);
  }
  c.silence_frames.rows = silence_rows;
  c.silence_frames.cols = dim;
  c.silence_frames.frame_shift = cfg.frontend.frame_shift;
  c.silence_frames.frame_len = cfg.frontend.frame_len;
  c.silence_frames.data = std::move(silence);
  return c;
}

Stage1Plan plan_stage1(const Clustering &clusters,
                       const std::vector<FeatureMatrix> &segment_features,
                       const PipelineConfig &cfg) {
  Stage1Plan plan;
  for (int64_t cid = 0; cid < clusters.size(); ++cid) {
    const std::vector<int64_t> &members = clusters.clusters[static_cast<size_t>(cid)];
    if (static_cast<int64_t>(members.size()) < cfg.min_cluster_size) {
      plan.notes.push_back("cluster " + std::to_string(cid) + " dropped: " +
                           std::to_string(members.size()) + " segment(s) below min_cluster_size");
      continue;
    }
    std::vector<int64_t> usable;
    for (int64_t s : members) {
      if (flat_start_feasible(segment_features[static_cast<size_t>(s)].rows, cfg.region_fractions,
                              cfg.states_per_unit)) {
        usable.push_back(s);
      } else {
        plan.notes.push_back("segment " + std::to_string(s) + " dropped from cluster " +
                             std::to_string(cid) + ": too short for a flat start");
      }
    }
    if (static_cast<int64_t>(usable.size()) < cfg.min_cluster_size) {
      plan.notes.push_back("cluster " + std::to_string(cid) + " dropped: only " +
                           std::to_string(usable.size()) + " usable segment(s)");
      continue;
    }
    const std::vector<std::string> transcript{region_label("OS", cid), region_label("RH", cid),
                                              region_label("OF", cid)};
    for (int64_t s : usable) {
      plan.segment_index.push_back(s);
      plan.transcripts.push_back(transcript);
    }
    plan.cluster_ids.push_back(cid);
  }
  return plan;
}

UnitInventory selftrain_forced(UnitInventory inv,
                               const std::vector<const FeatureMatrix *> &segments,
                               const std::vector<std::vector<std::string>> &transcripts,
                               const PipelineConfig &cfg, int64_t max_iter,
                               const std::string &stage_name,
                               std::vector<Alignment> *final_alignments) {
  require(segments.size() == transcripts.size(), Status::kLengthMismatch, "got ",
          segments.size(), " segments for ", transcripts.size(), " transcripts");
  require(!segments.empty(), Status::kEmptyInput, "nothing to train on");
  require(max_iter >= 1, Status::kInvalidArgument, "max_iter must be positive");

  inv.meta.stage = stage_name;
  inv.meta.iterations = 0;
  inv.meta.log_likelihood.clear();

  const int64_t n = static_cast<int64_t>(segments.size());
  std::vector<Alignment> aligns(static_cast<size_t>(n));
  auto align_all = [&]() {
    parallel_for(n, cfg.threads, [&](int64_t i) {
      aligns[static_cast<size_t>(i)] =
          viterbi_align(inv, *segments[static_cast<size_t>(i)], transcripts[static_cast<size_t>(i)]);
    });
    double ll = 0.0;  // fixed utterance order, independent of the thread count
    for (const Alignment &a : aligns) ll += a.total_log_likelihood;
    return ll;
  };

  double prev_ll = 0.0;
  for (int64_t iter = 1; iter <= max_iter; ++iter) {
    const double ll = align_all();
    inv.meta.log_likelihood.push_back(ll);
    std::vector<AlignedUtterance> data(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
      data[static_cast<size_t>(i)] = {segments[static_cast<size_t>(i)],
                                      &aligns[static_cast<size_t>(i)]};
    ReestimateOptions ropt;
    ropt.transition_floor = cfg.transition_floor;
    ropt.mixup = iter_in(cfg.mixup_iters, iter);
    ropt.max_components = cfg.max_components;
    ropt.min_frames_per_component = cfg.min_frames_per_component;
    ropt.threads = cfg.threads;
    inv = reestimate(inv, data, ropt);
    inv.meta.iterations = iter;
    const double rel = iter == 1 ? std::numeric_limits<double>::infinity()
                                 : std::abs(ll - prev_ll) / std::max(std::abs(prev_ll), 1e-300);
    prev_ll = ll;
    if (rel <= cfg.rel_ll_tol) break;
  }
  // One more pass so the persisted alignments (and the last trajectory
  // point) reflect the final parameters.
  inv.meta.log_likelihood.push_back(align_all());
  if (final_alignments) *final_alignments = std::move(aligns);
  return inv;
}

UnitInventory selftrain_decode(UnitInventory inv, const std::vector<FeatureMatrix> &utterances,
                               const PipelineConfig &cfg, int64_t max_iter,
                               const std::string &stage_name,
                               std::vector<Alignment> *final_alignments) {
  require(!utterances.empty(), Status::kEmptyCorpus, "no utterances to train on");
  require(max_iter >= 1, Status::kInvalidArgument, "max_iter must be positive");

  inv.meta.stage = stage_name;
  inv.meta.iterations = 0;
  inv.meta.log_likelihood.clear();

  DecodeOptions dopt;
  dopt.insertion_penalty = cfg.insertion_penalty;
  dopt.sequence_constraint = cfg.sequence_constraint;

  const int64_t n = static_cast<int64_t>(utterances.size());
  std::vector<Alignment> aligns(static_cast<size_t>(n));
  auto decode_all = [&]() {
    parallel_for(n, cfg.threads, [&](int64_t i) {
      aligns[static_cast<size_t>(i)] = viterbi_decode(inv, utterances[static_cast<size_t>(i)], dopt);
    });
    double ll = 0.0;
    for (const Alignment &a : aligns) ll += a.total_log_likelihood;
    return ll;
  };

  double prev_ll = 0.0;
  for (int64_t iter = 1; iter <= max_iter; ++iter) {
    const double ll = decode_all();
    inv.meta.log_likelihood.push_back(ll);
    std::vector<AlignedUtterance> data(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
      data[static_cast<size_t>(i)] = {&utterances[static_cast<size_t>(i)],
                                      &aligns[static_cast<size_t>(i)]};
    ReestimateOptions ropt;
    ropt.transition_floor = cfg.transition_floor;
    ropt.mixup = iter_in(cfg.mixup_iters, iter);
    ropt.max_components = cfg.max_components;
    ropt.min_frames_per_component = cfg.min_frames_per_component;
    ropt.threads = cfg.threads;
    inv = reestimate(inv, data, ropt);
    inv.meta.iterations = iter;
    const double rel = iter == 1 ? std::numeric_limits<double>::infinity()
                                 : std::abs(ll - prev_ll) / std::max(std::abs(prev_ll), 1e-300);
    prev_ll = ll;
    if (rel <= cfg.rel_ll_tol) break;
  }
  inv.meta.log_likelihood.push_back(decode_all());
  if (final_alignments) *final_alignments = std::move(aligns);
  return inv;
}

UnitInventory stage1_train(const Clustering &clusters, const AnalyzedCorpus &corpus,
                           const PipelineConfig &cfg, std::vector<Alignment> *final_alignments,
                           Stage1Plan *plan_out) {
  Stage1Plan plan = plan_stage1(clusters, corpus.segment_features, cfg);
  if (plan_out) *plan_out = plan;
  require(!plan.cluster_ids.empty(), Status::kNoUsableClusters,
          "no cluster kept min_cluster_size usable segments");

  std::vector<const FeatureMatrix *> train;
  train.reserve(plan.segment_index.size());
  for (int64_t s : plan.segment_index)
    train.push_back(&corpus.segment_features[static_cast<size_t>(s)]);
  const std::vector<double> floor = compute_variance_floor(train, cfg.variance_floor_scale);

  // Rebuild the per-cluster member lists (the plan is grouped by cluster).
  std::map<int64_t, std::vector<const FeatureMatrix *>> by_cluster;
  {
    size_t pos = 0;
    for (int64_t cid : plan.cluster_ids) {
      const std::string os = region_label("OS", cid);
      while (pos < plan.transcripts.size() && plan.transcripts[pos][0] == os) {
        by_cluster[cid].push_back(
            &corpus.segment_features[static_cast<size_t>(plan.segment_index[pos])]);
        ++pos;
      }
    }
  }

  UnitInventory inv;
  inv.feature_dim = train[0]->cols;
  inv.variance_floor = floor;

  FlatStartOptions fopt;
  fopt.fractions = cfg.region_fractions;
  fopt.kinds = {UnitKind::kOnset, UnitKind::kRhyme, UnitKind::kOffset};
  fopt.states_per_unit = cfg.states_per_unit;
  fopt.variance_floor_scale = cfg.variance_floor_scale;
  fopt.variance_floor = floor;
  for (int64_t cid : plan.cluster_ids) {
    fopt.labels = {region_label("OS", cid), region_label("RH", cid), region_label("OF", cid)};
    std::vector<HmmUnit> units = flat_start_units(by_cluster[cid], fopt, nullptr);
    for (HmmUnit &u : units) inv.units.push_back(std::move(u));
  }

  // Silence starts from the frames between segments; a corpus without any
  // falls back to pooled speech statistics.
  std::vector<std::string> silence_notes;
  {
    FlatStartOptions sopt;
    sopt.fractions = {1.0};
    sopt.labels = {kSilenceLabel};
    sopt.kinds = {UnitKind::kSilence};
    sopt.states_per_unit = cfg.states_per_unit;
    sopt.variance_floor_scale = cfg.variance_floor_scale;
    sopt.variance_floor = floor;
    if (corpus.silence_frames.rows >= cfg.states_per_unit) {
      std::vector<HmmUnit> sil = flat_start_units({&corpus.silence_frames}, sopt, nullptr);
      inv.units.push_back(std::move(sil[0]));
    } else {
      std::vector<HmmUnit> sil = flat_start_units(train, sopt, nullptr);
      inv.units.push_back(std::move(sil[0]));
      silence_notes.push_back("silence unit initialized from speech frames (no inter-segment frames)");
    }
  }

  inv.meta.stage = "stage1_init";
  inv = selftrain_forced(std::move(inv), train, plan.transcripts, cfg, cfg.stage1_max_iter,
                         "stage1", final_alignments);
  inv.meta.notes.insert(inv.meta.notes.begin(), silence_notes.begin(), silence_notes.end());
  inv.meta.notes.insert(inv.meta.notes.begin(), plan.notes.begin(), plan.notes.end());
  return inv;
}

UnitInventory stage2_train(const UnitInventory &inv,
                           const std::vector<FeatureMatrix> &utterances,
                           const PipelineConfig &cfg, std::vector<Alignment> *final_alignments) {
  require(!inv.units.empty(), Status::kEmptyInput, "empty inventory");
  require(!inv.meta.stage.empty(), Status::kInvalidArgument,
          "inventory carries no training provenance; run stage 1 first");
  return selftrain_decode(inv, utterances, cfg, cfg.stage2_max_iter, "stage2", final_alignments);
}

MergeResult merge_units(const UnitInventory &inv, int64_t target, const PipelineConfig &cfg,
                        Rng &rng) {
  require(target >= 1, Status::kInvalidArgument, "merge target must be positive");
  std::vector<int64_t> speech;
  for (int64_t i = 0; i < static_cast<int64_t>(inv.units.size()); ++i)
    if (inv.units[static_cast<size_t>(i)].kind != UnitKind::kSilence) speech.push_back(i);

  MergeResult r;
  if (target >= static_cast<int64_t>(speech.size())) {
    r.inventory = inv;
    for (const HmmUnit &u : inv.units) r.label_map[u.label] = u.label;
    return r;
  }

  const int64_t S = inv.units[static_cast<size_t>(speech[0])].num_states();
  for (int64_t i : speech)
    require(inv.units[static_cast<size_t>(i)].num_states() == S, Status::kInvalidArgument,
            "units disagree on state count");
  const int64_t D = inv.feature_dim;

  // A unit's embedding: per-state mixture means, weighted by the expected
  // dwell share 1/(1 - self loop) so long states dominate the geometry.
  auto embed = [&](const HmmUnit &u) {
    std::vector<double> dwell(static_cast<size_t>(S));
    double total = 0.0;
    for (int64_t s = 0; s < S; ++s) {
      dwell[static_cast<size_t>(s)] = 1.0 / std::max(1.0 - u.self_loop[static_cast<size_t>(s)], 1e-6);
      total += dwell[static_cast<size_t>(s)];
    }
    std::vector<double> e(static_cast<size_t>(S * D), 0.0);
    for (int64_t s = 0; s < S; ++s) {
      const GaussianMixture &g = u.states[static_cast<size_t>(s)];
      for (int64_t m = 0; m < g.num_components(); ++m)
        for (int64_t d = 0; d < D; ++d)
          e[static_cast<size_t>(s * D + d)] += g.weights[static_cast<size_t>(m)] * g.mean(m)[d];
      const double w = dwell[static_cast<size_t>(s)] / total;
      for (int64_t d = 0; d < D; ++d) e[static_cast<size_t>(s * D + d)] *= w;
    }
    return e;
  };

  auto is_transient = [](UnitKind k) {
    return k == UnitKind::kOnset || k == UnitKind::kOffset || k == UnitKind::kTransient;
  };

  struct Group {
    std::string prefix;
    UnitKind kind;
    std::vector<int64_t> members;
    bool vote_kind;
  };
  std::vector<Group> groups;
  if (cfg.merge_stratified) {
    groups.push_back({"TR", UnitKind::kTransient, {}, false});
    groups.push_back({"ST", UnitKind::kSteady, {}, false});
    for (int64_t i : speech)
      groups[is_transient(inv.units[static_cast<size_t>(i)].kind) ? 0 : 1].members.push_back(i);
    groups.erase(std::remove_if(groups.begin(), groups.end(),
                                [](const Group &g) { return g.members.empty(); }),
                 groups.end());
  } else {
    groups.push_back({"AU", UnitKind::kTransient, speech, true});
  }
  require(target >= static_cast<int64_t>(groups.size()), Status::kTargetExceedsKinds,
          "merge target ", target, " is below the ", groups.size(), " unit kind group(s)");

  // Split the target across groups proportionally, clamped to [1, size].
  const int64_t total_units = static_cast<int64_t>(speech.size());
  std::vector<int64_t> want(groups.size());
  int64_t assigned = 0;
  for (size_t g = 0; g < groups.size(); ++g) {
    const double raw = static_cast<double>(target) *
                       static_cast<double>(groups[g].members.size()) /
                       static_cast<double>(total_units);
    want[g] = std::clamp<int64_t>(std::llround(raw), 1,
                                  static_cast<int64_t>(groups[g].members.size()));
    assigned += want[g];
  }
  while (assigned != target) {
    if (assigned < target) {
      size_t best = groups.size();
      for (size_t g = 0; g < groups.size(); ++g) {
        const int64_t room = static_cast<int64_t>(groups[g].members.size()) - want[g];
        if (room <= 0) continue;
        if (best == groups.size() ||
            room > static_cast<int64_t>(groups[best].members.size()) - want[best])
          best = g;
      }
      ++want[best];
      ++assigned;
    } else {
      size_t best = groups.size();
      for (size_t g = 0; g < groups.size(); ++g)
        if (want[g] > 1 && (best == groups.size() || want[g] > want[best])) best = g;
      --want[best];
      --assigned;
    }
  }

  UnitInventory out;
  out.feature_dim = inv.feature_dim;
  out.variance_floor = inv.variance_floor;
  out.meta.stage = "merged";
  out.meta.notes.push_back("merged " + std::to_string(total_units) + " units into " +
                           std::to_string(target));

  for (size_t g = 0; g < groups.size(); ++g) {
    const Group &grp = groups[g];
    std::vector<std::vector<double>> pts;
    pts.reserve(grp.members.size());
    for (int64_t i : grp.members) pts.push_back(embed(inv.units[static_cast<size_t>(i)]));
    const std::vector<int64_t> assign = kmeans(pts, want[g], rng);
    std::vector<std::vector<int64_t>> clusters(static_cast<size_t>(want[g]));
    for (size_t p = 0; p < assign.size(); ++p)
      clusters[static_cast<size_t>(assign[p])].push_back(grp.members[p]);
    std::vector<int64_t> order;
    for (int64_t c = 0; c < want[g]; ++c)
      if (!clusters[static_cast<size_t>(c)].empty()) order.push_back(c);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      return clusters[static_cast<size_t>(a)][0] < clusters[static_cast<size_t>(b)][0];
    });

    for (size_t j = 0; j < order.size(); ++j) {
      const std::vector<int64_t> &members = clusters[static_cast<size_t>(order[j])];
      HmmUnit u;
      u.label = grp.prefix + "_" + std::to_string(j);
      u.kind = grp.kind;
      if (grp.vote_kind) {
        int64_t tr = 0;
        for (int64_t mi : members) if (is_transient(inv.units[static_cast<size_t>(mi)].kind)) ++tr;
        u.kind = 2 * tr >= static_cast<int64_t>(members.size()) ? UnitKind::kTransient
                                                                : UnitKind::kSteady;
      }
      u.states.resize(static_cast<size_t>(S));
      u.self_loop.assign(static_cast<size_t>(S), 0.0);
      const double inv_m = 1.0 / static_cast<double>(members.size());
      for (int64_t s = 0; s < S; ++s) {
        std::vector<double> mean(static_cast<size_t>(D), 0.0);
        std::vector<double> second(static_cast<size_t>(D), 0.0);
        for (int64_t mi : members) {
          const GaussianMixture &gm = inv.units[static_cast<size_t>(mi)].states[static_cast<size_t>(s)];
          for (int64_t m = 0; m < gm.num_components(); ++m)
            for (int64_t d = 0; d < D; ++d) {
              const double mu = gm.mean(m)[d];
              mean[static_cast<size_t>(d)] += gm.weights[static_cast<size_t>(m)] * mu;
              second[static_cast<size_t>(d)] +=
                  gm.weights[static_cast<size_t>(m)] * (gm.variance(m)[d] + mu * mu);
            }
          u.self_loop[static_cast<size_t>(s)] +=
              inv.units[static_cast<size_t>(mi)].self_loop[static_cast<size_t>(s)];
        }
        GaussianMixture g2;
        g2.dim = D;
        g2.weights = {1.0};
        g2.means.resize(static_cast<size_t>(D));
        g2.variances.resize(static_cast<size_t>(D));
        for (int64_t d = 0; d < D; ++d) {
          const double mu = mean[static_cast<size_t>(d)] * inv_m;
          const double var = second[static_cast<size_t>(d)] * inv_m - mu * mu;
          g2.means[static_cast<size_t>(d)] = mu;
          g2.variances[static_cast<size_t>(d)] =
              std::max(var, inv.variance_floor[static_cast<size_t>(d)]);
        }
        u.states[static_cast<size_t>(s)] = std::move(g2);
        u.self_loop[static_cast<size_t>(s)] *= inv_m;
      }
      for (int64_t mi : members)
        r.label_map[inv.units[static_cast<size_t>(mi)].label] = u.label;
      out.units.push_back(std::move(u));
    }
  }
  for (const HmmUnit &u : inv.units) {
    if (u.kind != UnitKind::kSilence) continue;
    out.units.push_back(u);
    r.label_map[u.label] = u.label;
  }
  r.inventory = std::move(out);
  return r;
}

Transcription transcription_from_alignment(const std::string &utterance_id, const Alignment &a,
                                           double frame_shift) {
  Transcription t;
  t.utterance_id = utterance_id;
  t.frame_shift = frame_shift;
  t.total_log_likelihood = a.total_log_likelihood;
  for (const AlignmentEntry &e : a.entries) {
    if (e.state == 0 || t.tokens.empty()) {
      t.tokens.push_back({e.label, e.start_frame, e.end_frame});
    } else {
      require(t.tokens.back().label == e.label, Status::kInconsistentAlignment,
              "entry continues a different unit at frame ", e.start_frame);
      t.tokens.back().end_frame = e.end_frame;
    }
  }
  return t;
}

std::string alignment_to_json(const std::string &utterance_id, const Alignment &a,
                              double frame_shift) {
  ordered_json j;
  j["utterance_id"] = utterance_id;
  j["frame_shift"] = frame_shift;
  j["log_likelihood"] = a.total_log_likelihood;
  j["entries"] = ordered_json::array();
  for (const AlignmentEntry &e : a.entries) {
    ordered_json je;
    je["label"] = e.label;
    je["state"] = e.state;
    je["start_frame"] = e.start_frame;
    je["end_frame"] = e.end_frame;
    je["start_s"] = e.start_frame * frame_shift;
    je["end_s"] = e.end_frame * frame_shift;
    j["entries"].push_back(std::move(je));
  }
  return j.dump();
}

Transcription encode_features(const UnitInventory &inv, const FeatureMatrix &f,
                              const PipelineConfig &cfg, const std::string &utterance_id) {
  DecodeOptions dopt;
  dopt.insertion_penalty = cfg.insertion_penalty;
  dopt.sequence_constraint = cfg.sequence_constraint;
  const Alignment a = viterbi_decode(inv, f, dopt);
  return transcription_from_alignment(utterance_id, a, cfg.frontend.frame_shift);
}

/// Frontend for standalone inputs: frozen training statistics when given,
/// the input's own CMVN otherwise.
static FeatureMatrix analyze_waveform(const Waveform &w, const PipelineConfig &cfg,
                                      const FeatureStats *stats) {
  if (stats == nullptr || stats->empty() || !cfg.frontend.cmvn)
    return compute_mfcc(w, cfg.frontend);
  FrontendConfig raw_cfg = cfg.frontend;
  raw_cfg.cmvn = false;
  FeatureMatrix f = compute_mfcc(w, raw_cfg);
  stats->apply(f, cfg.frontend.cmvn_var);
  return f;
}

Transcription encode_waveform(const UnitInventory &inv, const Waveform &w,
                              const PipelineConfig &cfg, const std::string &utterance_id,
                              const FeatureStats *stats) {
  return encode_features(inv, analyze_waveform(w, cfg, stats), cfg, utterance_id);
}

void save_feature_stats(const FeatureStats &stats, const std::string &path) {
  ordered_json j;
  j["format"] = "audkit-feature-stats";
  j["version"] = 1;
  j["frames"] = stats.frames;
  j["sum"] = stats.sum;
  j["sum_sq"] = stats.sum_sq;
  write_text_file(path, j.dump(2) + "\n");
}

FeatureStats load_feature_stats(const std::string &path) {
  try {
    const ordered_json j = ordered_json::parse(read_text_file(path));
    require(j.at("format") == "audkit-feature-stats", Status::kUnsupportedFormat,
            "not a feature-stats document");
    require(j.at("version") == 1, Status::kUnsupportedFormat,
            "unsupported feature-stats version");
    FeatureStats s;
    s.frames = j.at("frames").get<int64_t>();
    s.sum = j.at("sum").get<std::vector<double>>();
    s.sum_sq = j.at("sum_sq").get<std::vector<double>>();
    require(s.sum.size() == s.sum_sq.size(), Status::kCorruptFile,
            "feature-stats moments disagree in length");
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad feature stats ", path, ": ", e.what());
  }
}

/// Stats frozen by the training commands; empty when the model has none
/// (encode then falls back to per-input CMVN).
static FeatureStats model_feature_stats(const std::string &model_dir) {
  const std::string path = mp(model_dir, "feature_stats.json");
  if (!fs::exists(path)) return {};
  return load_feature_stats(path);
}

const Waveform *ExemplarStore::find(const std::string &label) const {
  for (const auto &kv : exemplars)
    if (kv.first == label) return &kv.second;
  return nullptr;
}

ExemplarStore build_exemplar_store(const UnitInventory &inv,
                                   const std::vector<FeatureMatrix> &features,
                                   const std::vector<Waveform> &waves,
                                   const std::vector<Alignment> &alignments,
                                   const PipelineConfig &cfg, Rng &rng) {
  require(features.size() == waves.size() && waves.size() == alignments.size(),
          Status::kLengthMismatch, "features/waves/alignments differ in length");
  require(!waves.empty(), Status::kEmptyInput, "no utterances to cut exemplars from");
  require(cfg.exemplar_max_occurrences >= 1, Status::kInvalidArgument,
          "exemplar_max_occurrences must be positive");
  const int rate = waves[0].sample_rate;
  for (const Waveform &w : waves)
    require(w.sample_rate == rate, Status::kInvalidArgument, "mixed sample rates in corpus");

  struct Occ {
    int64_t utt, start, end;
  };
  std::map<std::string, std::vector<Occ>> occs;
  for (size_t u = 0; u < alignments.size(); ++u) {
    const Transcription t = transcription_from_alignment("", alignments[u], 0.0);
    for (const TranscriptionToken &tok : t.tokens)
      occs[tok.label].push_back({static_cast<int64_t>(u), tok.start_frame, tok.end_frame});
  }

  const int shift_n = cfg.frontend.frame_shift_samples(rate);
  ExemplarStore store;
  store.sample_rate = rate;
  for (const HmmUnit &unit : inv.units) {
    if (unit.kind == UnitKind::kSilence) continue;
    auto it = occs.find(unit.label);
    if (it == occs.end() || it->second.empty()) {
      store.missing.push_back(unit.label);
      continue;
    }
    const std::vector<Occ> &all = it->second;
    std::vector<int64_t> pick(all.size());
    std::iota(pick.begin(), pick.end(), 0);
    if (static_cast<int64_t>(pick.size()) > cfg.exemplar_max_occurrences) {
      // Partial Fisher-Yates; the surviving indices stay in corpus order.
      for (int64_t j = 0; j < cfg.exemplar_max_occurrences; ++j) {
        const int64_t other =
            j + static_cast<int64_t>(rng.below(static_cast<uint64_t>(pick.size()) - j));
        std::swap(pick[static_cast<size_t>(j)], pick[static_cast<size_t>(other)]);
      }
      pick.resize(static_cast<size_t>(cfg.exemplar_max_occurrences));
      std::sort(pick.begin(), pick.end());
    }
    std::vector<FeatureMatrix> slices;
    slices.reserve(pick.size());
    for (int64_t p : pick) {
      const Occ &o = all[static_cast<size_t>(p)];
      slices.push_back(features[static_cast<size_t>(o.utt)].slice_rows(o.start, o.end));
    }
    int64_t medoid = 0;
    if (slices.size() > 1) {
      const DistanceMatrix dm = pairwise_distances(slices, cfg.dtw_band, cfg.threads);
      double best = std::numeric_limits<double>::infinity();
      for (int64_t i = 0; i < dm.n; ++i) {
        double sum = 0.0;
        for (int64_t k = 0; k < dm.n; ++k) sum += dm.at(i, k);
        if (sum < best) {
          best = sum;
          medoid = i;
        }
      }
    }
    const Occ &o = all[static_cast<size_t>(pick[static_cast<size_t>(medoid)])];
    // Cut through the tail of the last analysis window so an n-frame token
    // yields n frames when the exemplar is re-analyzed.
    const int64_t begin = o.start * shift_n;
    const int64_t end = std::min<int64_t>(
        (o.end - 1) * shift_n + cfg.frontend.frame_len_samples(rate),
        static_cast<int64_t>(waves[static_cast<size_t>(o.utt)].samples.size()));
    require(end > begin, Status::kInternal, "empty exemplar span for ", unit.label);
    Waveform w;
    w.sample_rate = rate;
    w.samples.assign(waves[static_cast<size_t>(o.utt)].samples.begin() + begin,
                     waves[static_cast<size_t>(o.utt)].samples.begin() + end);
    store.exemplars.emplace_back(unit.label, std::move(w));
  }
  return store;
}

Waveform decode_exemplar(const ExemplarStore &store, const Transcription &t, double crossfade_s) {
  Waveform out;
  out.sample_rate = store.sample_rate;
  if (t.tokens.empty()) return out;
  require(store.sample_rate > 0, Status::kInvalidArgument, "exemplar store has no sample rate");
  const int64_t cf = std::max<int64_t>(0, std::llround(crossfade_s * store.sample_rate));

  bool first = true;
  for (const TranscriptionToken &tok : t.tokens) {
    std::vector<float> piece;
    const Waveform *ex = store.find(tok.label);
    if (ex != nullptr) {
      piece = ex->samples;
    } else if (tok.label == kSilenceLabel) {
      const double span_s = static_cast<double>(tok.end_frame - tok.start_frame) * t.frame_shift;
      piece.assign(static_cast<size_t>(
                       std::max<int64_t>(0, std::llround(span_s * store.sample_rate))),
                   0.0f);
    } else {
      throw_error(Status::kUnknownUnit, "no exemplar for unit ", tok.label);
    }
    if (first) {
      out.samples = std::move(piece);
      first = false;
      continue;
    }
    const int64_t c = std::min<int64_t>(
        {cf, static_cast<int64_t>(out.samples.size()), static_cast<int64_t>(piece.size())});
    const int64_t base = static_cast<int64_t>(out.samples.size()) - c;
    for (int64_t j = 0; j < c; ++j) {
      const double a = static_cast<double>(j + 1) / static_cast<double>(c + 1);
      out.samples[static_cast<size_t>(base + j)] = static_cast<float>(
          out.samples[static_cast<size_t>(base + j)] * (1.0 - a) +
          piece[static_cast<size_t>(j)] * a);
    }
    out.samples.insert(out.samples.end(), piece.begin() + c, piece.end());
  }
  return out;
}

void save_exemplar_store(const ExemplarStore &store, const std::string &dir) {
  fs::create_directories(dir);
  ordered_json j;
  j["format"] = "audkit-exemplars";
  j["version"] = 1;
  j["sample_rate"] = store.sample_rate;
  ordered_json files = ordered_json::object();
  for (const auto &kv : store.exemplars) {
    const std::string file = safe_filename(kv.first) + ".wav";
    write_wav(kv.second, mp(dir, file));
    files[kv.first] = file;
  }
  j["exemplars"] = std::move(files);
  j["missing"] = store.missing;
  write_text_file(mp(dir, "exemplars.json"), j.dump(2) + "\n");
}

ExemplarStore load_exemplar_store(const std::string &dir) {
  const std::string index = mp(dir, "exemplars.json");
  ExemplarStore store;
  try {
    const ordered_json j = ordered_json::parse(read_text_file(index));
    require(j.value("format", std::string()) == "audkit-exemplars" && j.value("version", 0) == 1,
            Status::kUnsupportedFormat, "not an exemplar index: ", index);
    store.sample_rate = j.at("sample_rate").get<int>();
    for (const auto &kv : j.at("exemplars").items()) {
      Waveform w = read_wav(mp(dir, kv.value().get<std::string>()));
      require(w.sample_rate == store.sample_rate, Status::kCorruptFile,
              "exemplar rate mismatch in ", dir);
      store.exemplars.emplace_back(kv.key(), std::move(w));
    }
    if (j.contains("missing")) store.missing = j.at("missing").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad exemplar index ", index, ": ", e.what());
  }
  return store;
}

// ---------------------------------------------------------------------------
// Model-directory commands
// ---------------------------------------------------------------------------

void run_discover(const RunOptions &opt) {
  require(!opt.model_dir.empty(), Status::kInvalidArgument, "model directory required");
  require(!opt.manifest_path.empty(), Status::kInvalidArgument, "manifest required");
  PipelineConfig cfg = opt.config_path.empty() ? PipelineConfig{} : load_config(opt.config_path);
  cfg = with_overrides(cfg, opt.overrides);
  fs::create_directories(opt.model_dir);

  const CorpusManifest manifest = load_manifest(opt.manifest_path);
  const std::vector<ManifestEntry> train = manifest.with_split("train_unit");
  require(!train.empty(), Status::kEmptyCorpus, "manifest has no train_unit utterances");
  const AnalyzedCorpus corpus = analyze_corpus(train, cfg);

  const DistanceMatrix dm = pairwise_distances(corpus.segment_features, cfg.dtw_band, cfg.threads);
  save_distance_matrix(dm, mp(opt.model_dir, "distance_matrix.bin"));
  const NeighborGraph g = build_mutual_knn_graph(dm, cfg.knn_k);
  const Clustering clusters = connected_components(g);

  {
    std::string lines;
    for (size_t s = 0; s < corpus.segments.size(); ++s) {
      const Segment &seg = corpus.segments[s];
      ordered_json j;
      j["segment_index"] = static_cast<int64_t>(s);
      j["utterance_id"] = seg.utterance_id;
      j["start_frame"] = seg.start_frame;
      j["end_frame"] = seg.end_frame;
      j["peak_frame"] = seg.peak_frame;
      j["start_s"] = seg.start_frame * cfg.frontend.frame_shift;
      j["end_s"] = seg.end_frame * cfg.frontend.frame_shift;
      j["cluster"] = clusters.assignment[s];
      lines += j.dump() + "\n";
    }
    write_text_file(mp(opt.model_dir, "segments.jsonl"), lines);
  }
  write_text_file(mp(opt.model_dir, "clustering.json"), clustering_to_json(clusters));
  {
    std::vector<std::string> labels;
    labels.reserve(corpus.segments.size());
    for (const Segment &seg : corpus.segments)
      labels.push_back(seg.utterance_id + "[" + std::to_string(seg.start_frame) + "," +
                       std::to_string(seg.end_frame) + ")");
    write_text_file(mp(opt.model_dir, "graph.dot"), graph_to_dot(g, clusters, labels));
  }

  Stage1Plan plan;
  std::vector<Alignment> aligns1;
  const UnitInventory inv1 = stage1_train(clusters, corpus, cfg, &aligns1, &plan);
  save_inventory(inv1, mp(opt.model_dir, "inventory_stage1.json"));
  {
    std::string lines;
    for (size_t i = 0; i < aligns1.size(); ++i) {
      const int64_t seg_idx = plan.segment_index[i];
      const Segment &seg = corpus.segments[static_cast<size_t>(seg_idx)];
      lines += alignment_to_json(seg.utterance_id + "#" + std::to_string(seg_idx), aligns1[i],
                                 cfg.frontend.frame_shift) +
               "\n";
    }
    write_text_file(mp(opt.model_dir, "alignments_stage1.jsonl"), lines);
  }

  std::vector<Alignment> aligns2;
  const UnitInventory inv2 = stage2_train(inv1, corpus.features, cfg, &aligns2);
  Rng rng(static_cast<uint64_t>(cfg.seed));
  save_inventory(inv2, inv_path(opt.model_dir, 1));
  {
    std::string lines;
    for (size_t i = 0; i < aligns2.size(); ++i)
      lines += alignment_to_json(corpus.ids[i], aligns2[i], cfg.frontend.frame_shift) + "\n";
    write_text_file(aligns_path(opt.model_dir, 1), lines);
  }
  write_textgrids(textgrids_dir(opt.model_dir, 1), corpus, aligns2, cfg.frontend.frame_shift);
  const ExemplarStore store =
      build_exemplar_store(inv2, corpus.features, corpus.waves, aligns2, cfg, rng);
  save_exemplar_store(store, exemplars_dir(opt.model_dir, 1));

  save_config(cfg, mp(opt.model_dir, "pipeline_config.json"));
  save_feature_stats(corpus.feature_stats, mp(opt.model_dir, "feature_stats.json"));

  const std::string hash = config_hash(cfg);
  ordered_json meta;
  meta["tool"] = "audkit";
  meta["version"] = kVersion;
  meta["config_hash"] = hash;
  meta["seed"] = cfg.seed;
  meta["threads"] = cfg.threads;
  {
    ordered_json jc;
    jc["train_utterances"] = static_cast<int64_t>(train.size());
    jc["total_duration_s"] = corpus.total_duration_s;
    jc["segments"] = static_cast<int64_t>(corpus.segments.size());
    jc["silence_frames"] = corpus.silence_frames.rows;
    meta["corpus"] = std::move(jc);
  }
  {
    ordered_json jg;
    jg["graph_edges"] = static_cast<int64_t>(g.edges.size());
    jg["clusters"] = clusters.size();
    jg["usable_clusters"] = static_cast<int64_t>(plan.cluster_ids.size());
    jg["trained_segments"] = static_cast<int64_t>(plan.segment_index.size());
    meta["clustering"] = std::move(jg);
  }
  {
    ordered_json stages;
    stages["stage1"] = stage_json(inv1.meta, hash);
    stages["stage2"] = stage_json(inv2.meta, hash);
    meta["stages"] = std::move(stages);
  }
  meta["exemplars"] = exemplar_json(store);
  write_text_file(mp(opt.model_dir, "run_meta.json"), meta.dump(2) + "\n");
}

void run_train_stage2(const RunOptions &opt) {
  require(!opt.manifest_path.empty(), Status::kInvalidArgument, "manifest required");
  const PipelineConfig cfg = model_config(opt.model_dir, opt.overrides);
  const CorpusManifest manifest = load_manifest(opt.manifest_path);
  const std::vector<ManifestEntry> train = manifest.with_split("train_unit");
  require(!train.empty(), Status::kEmptyCorpus, "manifest has no train_unit utterances");
  const AnalyzedCorpus corpus = analyze_corpus(train, cfg);

  const UnitInventory inv1 = load_inventory(mp(opt.model_dir, "inventory_stage1.json"));
  std::vector<Alignment> aligns2;
  const UnitInventory inv2 = stage2_train(inv1, corpus.features, cfg, &aligns2);

  Rng rng(static_cast<uint64_t>(cfg.seed));
  save_inventory(inv2, inv_path(opt.model_dir, 1));
  {
    std::string lines;
    for (size_t i = 0; i < aligns2.size(); ++i)
      lines += alignment_to_json(corpus.ids[i], aligns2[i], cfg.frontend.frame_shift) + "\n";
    write_text_file(aligns_path(opt.model_dir, 1), lines);
  }
  write_textgrids(textgrids_dir(opt.model_dir, 1), corpus, aligns2, cfg.frontend.frame_shift);
  const ExemplarStore store =
      build_exemplar_store(inv2, corpus.features, corpus.waves, aligns2, cfg, rng);
  save_exemplar_store(store, exemplars_dir(opt.model_dir, 1));
  save_feature_stats(corpus.feature_stats, mp(opt.model_dir, "feature_stats.json"));

  ordered_json meta = load_run_meta(mp(opt.model_dir, "run_meta.json"));
  meta["stages"]["stage2"] = stage_json(inv2.meta, config_hash(cfg));
  meta["exemplars"] = exemplar_json(store);
  write_text_file(mp(opt.model_dir, "run_meta.json"), meta.dump(2) + "\n");
}

void run_merge(const MergeRunOptions &opt) {
  require(!opt.manifest_path.empty(), Status::kInvalidArgument,
          "merge re-trains on the unit corpus; manifest required");
  const PipelineConfig cfg = model_config(opt.model_dir, opt.overrides);
  const int64_t target = opt.target > 0 ? opt.target : cfg.merge_target;

  const UnitInventory system1 = load_inventory(inv_path(opt.model_dir, 1));
  Rng rng(static_cast<uint64_t>(cfg.seed));
  const MergeResult merged = merge_units(system1, target, cfg, rng);
  {
    ordered_json j;  // inventory order, for stable diffs
    for (const HmmUnit &u : system1.units) j[u.label] = merged.label_map.at(u.label);
    write_text_file(mp(opt.model_dir, "label_map.json"), j.dump(2) + "\n");
  }

  const CorpusManifest manifest = load_manifest(opt.manifest_path);
  const std::vector<ManifestEntry> train = manifest.with_split("train_unit");
  require(!train.empty(), Status::kEmptyCorpus, "manifest has no train_unit utterances");
  const AnalyzedCorpus corpus = analyze_corpus(train, cfg);

  // Re-derive the cluster transcripts (reusing the stored distance matrix
  // when it still matches) and map them through the merge.
  DistanceMatrix dm;
  const std::string dm_path = mp(opt.model_dir, "distance_matrix.bin");
  if (fs::exists(dm_path)) dm = load_distance_matrix(dm_path);
  if (dm.n != static_cast<int64_t>(corpus.segment_features.size()))
    dm = pairwise_distances(corpus.segment_features, cfg.dtw_band, cfg.threads);
  const Clustering clusters = connected_components(build_mutual_knn_graph(dm, cfg.knn_k));
  const Stage1Plan plan = plan_stage1(clusters, corpus.segment_features, cfg);
  require(!plan.segment_index.empty(), Status::kNoUsableClusters,
          "no usable clusters for re-training");

  std::vector<const FeatureMatrix *> train_segs;
  train_segs.reserve(plan.segment_index.size());
  for (int64_t s : plan.segment_index)
    train_segs.push_back(&corpus.segment_features[static_cast<size_t>(s)]);
  std::vector<std::vector<std::string>> transcripts = plan.transcripts;
  for (auto &tr : transcripts)
    for (std::string &label : tr) {
      const auto it = merged.label_map.find(label);
      require(it != merged.label_map.end(), Status::kUnknownLabel, "label ", label,
              " missing from the merge map");
      label = it->second;
    }

  const UnitInventory m1 = selftrain_forced(merged.inventory, train_segs, transcripts, cfg,
                                            cfg.stage1_max_iter, "system2_stage1", nullptr);
  std::vector<Alignment> aligns;
  const UnitInventory m2 =
      selftrain_decode(m1, corpus.features, cfg, cfg.stage2_max_iter, "system2_stage2", &aligns);

  save_inventory(m2, inv_path(opt.model_dir, 2));
  {
    std::string lines;
    for (size_t i = 0; i < aligns.size(); ++i)
      lines += alignment_to_json(corpus.ids[i], aligns[i], cfg.frontend.frame_shift) + "\n";
    write_text_file(aligns_path(opt.model_dir, 2), lines);
  }
  write_textgrids(textgrids_dir(opt.model_dir, 2), corpus, aligns, cfg.frontend.frame_shift);
  const ExemplarStore store =
      build_exemplar_store(m2, corpus.features, corpus.waves, aligns, cfg, rng);
  save_exemplar_store(store, exemplars_dir(opt.model_dir, 2));
  save_feature_stats(corpus.feature_stats, mp(opt.model_dir, "feature_stats.json"));

  ordered_json meta = load_run_meta(mp(opt.model_dir, "run_meta.json"));
  {
    ordered_json jm;
    jm["target"] = target;
    jm["merged_units"] = static_cast<int64_t>(merged.inventory.units.size());
    jm["notes"] = merged.inventory.meta.notes;
    meta["merge"] = std::move(jm);
  }
  meta["stages"]["system2_stage1"] = stage_json(m1.meta, config_hash(cfg));
  meta["stages"]["system2_stage2"] = stage_json(m2.meta, config_hash(cfg));
  meta["exemplars_system2"] = exemplar_json(store);
  write_text_file(mp(opt.model_dir, "run_meta.json"), meta.dump(2) + "\n");
}

std::string run_encode(const EncodeRunOptions &opt) {
  const PipelineConfig cfg = model_config(opt.model_dir, opt.overrides);
  const UnitInventory inv = load_inventory(inv_path(opt.model_dir, opt.system));
  const FeatureStats stats = model_feature_stats(opt.model_dir);
  const bool single = !opt.wav_path.empty();
  const bool batch = !opt.manifest_path.empty();
  require(single != batch, Status::kInvalidArgument,
          "need exactly one of a wav file or a manifest");

  if (single) {
    const Waveform w = read_wav(opt.wav_path);
    const Transcription t =
        encode_waveform(inv, w, cfg, fs::path(opt.wav_path).stem().string(), &stats);
    ordered_json j = ordered_json::parse(transcription_to_json(t, 2));
    j["bitrate_bits_per_s"] = bitrate({t}, w.duration());
    const std::string out = j.dump(2) + "\n";
    if (!opt.output_path.empty()) write_text_file(opt.output_path, out);
    return out;
  }

  const CorpusManifest manifest = load_manifest(opt.manifest_path);
  const std::vector<ManifestEntry> entries = manifest.with_split(opt.split);
  require(!entries.empty(), Status::kEmptyCorpus, "manifest has no ", opt.split, " utterances");
  const int64_t n = static_cast<int64_t>(entries.size());
  std::vector<Waveform> waves(static_cast<size_t>(n));
  double total_s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    waves[static_cast<size_t>(i)] = read_wav(entries[static_cast<size_t>(i)].path);
    total_s += waves[static_cast<size_t>(i)].duration();
  }
  std::vector<Transcription> ts(static_cast<size_t>(n));
  parallel_for(n, cfg.threads, [&](int64_t i) {
    ts[static_cast<size_t>(i)] = encode_waveform(inv, waves[static_cast<size_t>(i)], cfg,
                                                 entries[static_cast<size_t>(i)].utterance_id,
                                                 &stats);
  });
  const std::string out_path =
      opt.output_path.empty()
          ? mp(opt.model_dir, "encodings_system" + std::to_string(opt.system) + ".jsonl")
          : opt.output_path;
  save_transcriptions_jsonl(ts, out_path);
  int64_t symbols = 0;
  for (const Transcription &t : ts) symbols += static_cast<int64_t>(t.tokens.size());
  ordered_json j;
  j["utterances"] = n;
  j["symbol_count"] = symbols;
  j["total_duration_s"] = total_s;
  j["bitrate_bits_per_s"] = bitrate(ts, total_s);
  j["output"] = out_path;
  return j.dump(2) + "\n";
}

void run_resynth(const ResynthRunOptions &opt) {
  require(!opt.output_wav.empty(), Status::kInvalidArgument, "output wav path required");
  const PipelineConfig cfg = model_config(opt.model_dir, opt.overrides);
  const bool from_json = !opt.transcription_path.empty();
  const bool from_wav = !opt.wav_path.empty();
  require(from_json != from_wav, Status::kInvalidArgument,
          "need exactly one of a transcription or a wav file");

  Transcription t;
  if (from_json) {
    t = transcription_from_json(read_text_file(opt.transcription_path));
  } else {
    const UnitInventory inv = load_inventory(inv_path(opt.model_dir, opt.system));
    const FeatureStats stats = model_feature_stats(opt.model_dir);
    t = encode_waveform(inv, read_wav(opt.wav_path), cfg,
                        fs::path(opt.wav_path).stem().string(), &stats);
  }
  const ExemplarStore store = load_exemplar_store(exemplars_dir(opt.model_dir, opt.system));
  write_wav(decode_exemplar(store, t, cfg.crossfade), opt.output_wav);
}

std::string run_eval(const EvalRunOptions &opt) {
  require(!opt.manifest_path.empty(), Status::kInvalidArgument, "manifest required");
  const PipelineConfig cfg = model_config(opt.model_dir, opt.overrides);
  const UnitInventory inv = load_inventory(inv_path(opt.model_dir, opt.system));
  const FeatureStats stats = model_feature_stats(opt.model_dir);
  const CorpusManifest manifest = load_manifest(opt.manifest_path);
  const std::vector<ManifestEntry> entries = manifest.with_split(opt.split);
  require(!entries.empty(), Status::kEmptyCorpus, "manifest has no ", opt.split, " utterances");

  const int64_t n = static_cast<int64_t>(entries.size());
  std::vector<Waveform> waves(static_cast<size_t>(n));
  double total_s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    waves[static_cast<size_t>(i)] = read_wav(entries[static_cast<size_t>(i)].path);
    total_s += waves[static_cast<size_t>(i)].duration();
  }
  std::vector<FeatureMatrix> feats(static_cast<size_t>(n));
  std::vector<Transcription> ts(static_cast<size_t>(n));
  parallel_for(n, cfg.threads, [&](int64_t i) {
    feats[static_cast<size_t>(i)] = analyze_waveform(waves[static_cast<size_t>(i)], cfg, &stats);
    ts[static_cast<size_t>(i)] = encode_features(inv, feats[static_cast<size_t>(i)], cfg,
                                                 entries[static_cast<size_t>(i)].utterance_id);
  });

  MetricReport report;
  report.duration_s = total_s;
  report.inventory_size = static_cast<int64_t>(inv.units.size());
  for (const Transcription &t : ts) report.symbol_count += static_cast<int64_t>(t.tokens.size());
  report.bitrate = bitrate(ts, total_s);

  if (!opt.reference_path.empty()) {
    const auto refs = load_reference_intervals(opt.reference_path);
    std::vector<std::string> pred, ref;
    const double shift = cfg.frontend.frame_shift;
    for (int64_t i = 0; i < n; ++i) {
      const auto it = refs.find(entries[static_cast<size_t>(i)].utterance_id);
      if (it == refs.end()) continue;
      size_t tok = 0;
      for (int64_t f = 0; f < feats[static_cast<size_t>(i)].rows; ++f) {
        const auto &tokens = ts[static_cast<size_t>(i)].tokens;
        while (tok + 1 < tokens.size() && tokens[tok].end_frame <= f) ++tok;
        const double mid = (static_cast<double>(f) + 0.5) * shift;
        const std::string *label = nullptr;
        for (const RefInterval &iv : it->second)
          if (iv.start_s <= mid && mid < iv.end_s) {
            label = &iv.label;
            break;
          }
        if (label == nullptr) continue;  // frame outside the labeled regions
        pred.push_back(tokens[tok].label);
        ref.push_back(*label);
      }
    }
    require(!pred.empty(), Status::kEmptyInput, "reference intervals cover no frames of the ",
            opt.split, " split");
    const ClusterQuality q = cluster_quality(pred, ref);
    report.purity = q.purity;
    report.nmi = q.nmi;
  }

  if (!opt.triplets_path.empty()) {
    std::map<std::string, const FeatureMatrix *> split_feats;
    for (int64_t i = 0; i < n; ++i)
      split_feats[entries[static_cast<size_t>(i)].utterance_id] = &feats[static_cast<size_t>(i)];
    std::map<std::string, ManifestEntry> all_entries;
    for (const ManifestEntry &e : manifest.entries) all_entries[e.utterance_id] = e;
    std::map<std::string, FeatureMatrix> extra;  // node addresses stay stable
    auto features_of = [&](const std::string &id) -> const FeatureMatrix & {
      const auto hit = split_feats.find(id);
      if (hit != split_feats.end()) return *hit->second;
      const auto cached = extra.find(id);
      if (cached != extra.end()) return cached->second;
      const auto me = all_entries.find(id);
      require(me != all_entries.end(), Status::kNotFound, "triplet utterance ", id,
              " not in the manifest");
      extra[id] = analyze_waveform(read_wav(me->second.path), cfg, &stats);
      return extra[id];
    };
    const double shift = cfg.frontend.frame_shift;
    auto slice = [&](const ordered_json &side) {
      const std::string id = side.at("utterance_id").get<std::string>();
      const FeatureMatrix &f = features_of(id);
      const int64_t s = std::clamp<int64_t>(
          std::llround(side.at("start_s").get<double>() / shift), 0, f.rows);
      const int64_t e =
          std::clamp<int64_t>(std::llround(side.at("end_s").get<double>() / shift), 0, f.rows);
      require(e > s, Status::kOutOfRange, "empty triplet span in ", id);
      return f.slice_rows(s, e);
    };

    std::vector<AbxTriplet> triplets;
    {
      std::istringstream in(read_text_file(opt.triplets_path));
      std::string line;
      try {
        while (std::getline(in, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          const ordered_json j = ordered_json::parse(line);
          triplets.push_back({slice(j.at("a")), slice(j.at("b")), slice(j.at("x"))});
        }
      } catch (const nlohmann::json::exception &e) {
        throw_error(Status::kParseError, "bad triplets ", opt.triplets_path, ": ", e.what());
      }
    }
    require(!triplets.empty(), Status::kEmptyInput, "no triplets in ", opt.triplets_path);

    if (cfg.abx_distance == "dtw") {
      report.abx_error = abx_error(triplets, cfg.dtw_band, cfg.threads);
    } else {  // "label_edit" (the config validator pins the choices)
      std::vector<std::pair<double, double>> d(triplets.size());
      parallel_for(static_cast<int64_t>(triplets.size()), cfg.threads, [&](int64_t i) {
        const auto &tr = triplets[static_cast<size_t>(i)];
        const std::vector<std::string> la = encode_features(inv, tr.a, cfg, "a").labels();
        const std::vector<std::string> lb = encode_features(inv, tr.b, cfg, "b").labels();
        const std::vector<std::string> lx = encode_features(inv, tr.x, cfg, "x").labels();
        d[static_cast<size_t>(i)] = {static_cast<double>(edit_distance(lx, la)),
                                     static_cast<double>(edit_distance(lx, lb))};
      });
      report.abx_error = abx_from_distances(d);
    }
  }

  const std::string json_path =
      opt.output_json.empty()
          ? mp(opt.model_dir, "metrics_system" + std::to_string(opt.system) + ".json")
          : opt.output_json;
  const std::string csv_path =
      opt.output_csv.empty()
          ? mp(opt.model_dir, "metrics_system" + std::to_string(opt.system) + ".csv")
          : opt.output_csv;
  const std::string json_text = metric_report_to_json(report);
  write_text_file(json_path, json_text);
  write_text_file(csv_path, metric_report_to_csv(report));
  return json_text;
}

}  // namespace audkit
