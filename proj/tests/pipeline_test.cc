// tests/pipeline_test.cc
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "common.h"
#include "pipeline.h"
#include "rng.h"
#include "testutil.h"

using namespace audkit;
using testing::TempDir;

TEST_CASE("plan_stage1 keeps big clusters and reports what it drops") {
  auto sc = testing::make_feature_corpus(21, 2, 3, 4, 20);

  SUBCASE("everything usable") {
    Stage1Plan plan = plan_stage1(sc.truth, sc.corpus.segment_features, sc.cfg);
    CHECK(plan.cluster_ids.size() == 3);
    CHECK(plan.segment_index.size() == 60);
    CHECK(plan.transcripts.size() == 60);
    for (size_t i = 0; i < plan.transcripts.size(); ++i) {
      REQUIRE(plan.transcripts[i].size() == 3);
      int64_t cluster = sc.truth.assignment[static_cast<size_t>(plan.segment_index[i])];
      CHECK(plan.transcripts[i][0] == "OS_" + std::to_string(cluster));
      CHECK(plan.transcripts[i][1] == "RH_" + std::to_string(cluster));
      CHECK(plan.transcripts[i][2] == "OF_" + std::to_string(cluster));
    }
  }

  SUBCASE("clusters below min_cluster_size are dropped with a note") {
    Clustering c = sc.truth;
    // Splinter two members of cluster 2 into their own cluster 3.
    int64_t a = c.clusters[2][0], b = c.clusters[2][1];
    c.clusters[2].erase(c.clusters[2].begin(), c.clusters[2].begin() + 2);
    c.clusters.push_back({a, b});
    c.assignment[static_cast<size_t>(a)] = 3;
    c.assignment[static_cast<size_t>(b)] = 3;

    Stage1Plan plan = plan_stage1(c, sc.corpus.segment_features, sc.cfg);
    CHECK(plan.cluster_ids == std::vector<int64_t>({0, 1, 2}));
    CHECK(plan.segment_index.size() == 58);
    bool noted = false;
    for (const auto &n : plan.notes) noted |= n.find("cluster 3") != std::string::npos;
    CHECK(noted);
  }

  SUBCASE("segments too short to flat-start are dropped") {
    auto feats = sc.corpus.segment_features;
    feats[5] = feats[5].slice_rows(0, 6);  // 6 frames cannot host 3 regions x 3 states
    Stage1Plan plan = plan_stage1(sc.truth, feats, sc.cfg);
    CHECK(plan.segment_index.size() == 59);
    CHECK(std::find(plan.segment_index.begin(), plan.segment_index.end(), 5) ==
          plan.segment_index.end());
    bool noted = false;
    for (const auto &n : plan.notes) noted |= n.find("segment") != std::string::npos;
    CHECK(noted);
  }
}

TEST_CASE("stage1_train learns one unit triple per cluster plus silence") {
  auto sc = testing::make_feature_corpus(23, 3, 3, 4, 20);
  std::vector<Alignment> aligns;
  Stage1Plan plan;
  UnitInventory inv = stage1_train(sc.truth, sc.corpus, sc.cfg, &aligns, &plan);

  CHECK(inv.feature_dim == 3);
  CHECK(inv.meta.stage == "stage1");
  REQUIRE(inv.units.size() == 10);  // 3 clusters x 3 regions + silence
  std::set<std::string> labels;
  for (const auto &u : inv.units) labels.insert(u.label);
  for (int c = 0; c < 3; ++c) {
    CHECK(labels.count("OS_" + std::to_string(c)));
    CHECK(labels.count("RH_" + std::to_string(c)));
    CHECK(labels.count("OF_" + std::to_string(c)));
  }
  CHECK(labels.count(kSilenceLabel));
  CHECK(inv.unit(kSilenceLabel).kind == UnitKind::kSilence);
  CHECK(inv.unit("RH_1").kind == UnitKind::kRhyme);

  // The trajectory is recorded, converged and monotone.
  REQUIRE(inv.meta.log_likelihood.size() >= 2);
  CHECK(inv.meta.iterations >= 1);
  CHECK(inv.meta.iterations <= sc.cfg.stage1_max_iter);
  for (size_t i = 1; i < inv.meta.log_likelihood.size(); ++i)
    CHECK(inv.meta.log_likelihood[i] >=
          inv.meta.log_likelihood[i - 1] - 1e-6 * std::abs(inv.meta.log_likelihood[i - 1]));

  // Alignments cover each trained segment.
  REQUIRE(aligns.size() == plan.segment_index.size());
  for (size_t i = 0; i < aligns.size(); ++i) {
    int64_t rows =
        sc.corpus.segment_features[static_cast<size_t>(plan.segment_index[i])].rows;
    CHECK(aligns[i].entries.front().start_frame == 0);
    CHECK(aligns[i].entries.back().end_frame == rows);
  }

  // Rhyme means should sit near the generating template means.
  for (int c = 0; c < 3; ++c) {
    const HmmUnit &rh = inv.unit("RH_" + std::to_string(c));
    // Training relabels clusters by discovery order; find the closest
    // template and require a tight match.
    double best = 1e30;
    for (int tpl = 0; tpl < 3; ++tpl) {
      auto want = testing::region_mean(tpl, 1, 3);
      double d = 0.0;
      for (int64_t k = 0; k < 3; ++k) d += std::abs(rh.states[1].means[static_cast<size_t>(k)] -
                                                    want[static_cast<size_t>(k)]);
      best = std::min(best, d);
    }
    CHECK(best < 0.5);
  }
}

TEST_CASE("stage1_train with no usable clusters reports NoUsableClusters") {
  auto sc = testing::make_feature_corpus(29, 2, 2, 4, 10);
  PipelineConfig cfg = sc.cfg;
  cfg.min_cluster_size = 100;  // nothing qualifies
  try {
    stage1_train(sc.truth, sc.corpus, cfg);
    FAIL("expected Error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::kNoUsableClusters);
  }
}

TEST_CASE("stage2_train decodes continuous speech and stays monotone") {
  auto sc = testing::make_feature_corpus(31, 2, 3, 4, 20);
  UnitInventory inv1 = stage1_train(sc.truth, sc.corpus, sc.cfg);

  std::vector<Alignment> aligns;
  UnitInventory inv2 = stage2_train(inv1, sc.corpus.features, sc.cfg, &aligns);
  CHECK(inv2.meta.stage == "stage2");
  REQUIRE(aligns.size() == sc.corpus.features.size());
  for (size_t u = 0; u < aligns.size(); ++u) {
    CHECK(aligns[u].entries.front().start_frame == 0);
    CHECK(aligns[u].entries.back().end_frame == sc.corpus.features[u].rows);
  }
  for (size_t i = 1; i < inv2.meta.log_likelihood.size(); ++i)
    CHECK(inv2.meta.log_likelihood[i] >=
          inv2.meta.log_likelihood[i - 1] - 1e-6 * std::abs(inv2.meta.log_likelihood[i - 1]));

  // Silence frames should mostly decode as the silence unit.
  int64_t sil_right = 0, sil_total = 0;
  for (size_t u = 0; u < aligns.size(); ++u) {
    std::set<int64_t> in_segment;
    for (auto [b, e] : sc.spans[u])
      for (int64_t t = b; t < e; ++t) in_segment.insert(t);
    for (const auto &entry : aligns[u].entries)
      for (int64_t t = entry.start_frame; t < entry.end_frame; ++t) {
        if (in_segment.count(t)) continue;
        ++sil_total;
        if (entry.label == kSilenceLabel) ++sil_right;
      }
  }
  CHECK(sil_total > 0);
  CHECK(static_cast<double>(sil_right) > 0.9 * static_cast<double>(sil_total));

  // Empty and untrained inventories are rejected.
  CHECK_THROWS_AS(stage2_train(UnitInventory{}, sc.corpus.features, sc.cfg), Error);
  try {
    stage2_train(inv1, {}, sc.cfg);
    FAIL("expected Error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::kEmptyCorpus);
  }
}

TEST_CASE("merge_units pools units and maps every label") {
  auto sc = testing::make_feature_corpus(37, 2, 3, 4, 20);
  UnitInventory inv1 = stage1_train(sc.truth, sc.corpus, sc.cfg);
  UnitInventory inv2 = stage2_train(inv1, sc.corpus.features, sc.cfg);
  Rng rng(sc.cfg.seed);

  SUBCASE("a target below the unit count merges") {
    MergeResult mr = merge_units(inv2, 4, sc.cfg, rng);
    int64_t silence = 0, merged = 0;
    for (const auto &u : mr.inventory.units)
      (u.kind == UnitKind::kSilence ? silence : merged) += 1;
    CHECK(silence == 1);
    CHECK(merged == 4);
    CHECK(mr.inventory.meta.stage == "merged");

    // The map covers every original label and targets existing new units.
    std::set<std::string> new_labels;
    for (const auto &u : mr.inventory.units) new_labels.insert(u.label);
    CHECK(mr.label_map.size() == inv2.units.size());
    for (const auto &u : inv2.units) {
      REQUIRE(mr.label_map.count(u.label));
      CHECK(new_labels.count(mr.label_map.at(u.label)));
    }
    CHECK(mr.label_map.at(kSilenceLabel) == kSilenceLabel);

    // Stratified: transient-side units (onsets/offsets) stay apart from
    // steady-side ones (rhymes).
    for (const auto &u : inv2.units) {
      if (u.kind == UnitKind::kSilence) continue;
      const std::string &target = mr.label_map.at(u.label);
      bool transient_source =
          u.kind == UnitKind::kOnset || u.kind == UnitKind::kOffset;
      CHECK(target.rfind(transient_source ? "TR_" : "ST_", 0) == 0);
    }

    // Merged mixtures stay valid.
    for (const auto &u : mr.inventory.units) {
      for (const auto &st : u.states) {
        double wsum = 0.0;
        for (double w : st.weights) wsum += w;
        CHECK(wsum == doctest::Approx(1.0));
        for (size_t d = 0; d < st.variances.size(); ++d)
          CHECK(st.variances[d] >=
                mr.inventory.variance_floor[d % mr.inventory.variance_floor.size()] - 1e-15);
      }
      for (double s : u.self_loop) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
      }
    }
  }

  SUBCASE("a target at or above the count is the identity") {
    MergeResult mr = merge_units(inv2, 9, sc.cfg, rng);
    CHECK(mr.inventory.units.size() == inv2.units.size());
    for (const auto &[from, to] : mr.label_map) CHECK(from == to);
  }

  SUBCASE("bad targets are rejected") {
    CHECK_THROWS_AS(merge_units(inv2, 0, sc.cfg, rng), Error);
    try {
      merge_units(inv2, 1, sc.cfg, rng);  // fewer than the stratified group count
      FAIL("expected Error");
    } catch (const Error &e) {
      CHECK(e.status() == Status::kTargetExceedsKinds);
    }
  }

  SUBCASE("unstratified merge uses the generic prefix") {
    PipelineConfig cfg = sc.cfg;
    cfg.merge_stratified = false;
    MergeResult mr = merge_units(inv2, 2, cfg, rng);
    int64_t generic = 0;
    for (const auto &u : mr.inventory.units)
      if (u.label.rfind("AU_", 0) == 0) ++generic;
    CHECK(generic == 2);
  }
}

TEST_CASE("transcription_from_alignment folds states into unit tokens") {
  Alignment a;
  a.entries.push_back({"X", 0, 0, 3});
  a.entries.push_back({"X", 1, 3, 5});
  a.entries.push_back({"X", 2, 5, 9});
  a.entries.push_back({"Y", 0, 9, 12});
  a.total_log_likelihood = -5.0;

  Transcription t = transcription_from_alignment("u", a, 0.01);
  CHECK(t.utterance_id == "u");
  REQUIRE(t.tokens.size() == 2);
  CHECK(t.tokens[0].label == "X");
  CHECK(t.tokens[0].start_frame == 0);
  CHECK(t.tokens[0].end_frame == 9);
  CHECK(t.tokens[1].label == "Y");
  CHECK(t.total_log_likelihood == doctest::Approx(-5.0));

  // Re-entering the same unit at state 0 is a fresh token.
  Alignment b;
  b.entries.push_back({"X", 0, 0, 2});
  b.entries.push_back({"X", 0, 2, 4});
  Transcription t2 = transcription_from_alignment("u", b, 0.01);
  CHECK(t2.tokens.size() == 2);

  // A label switch without a state-0 entry is inconsistent.
  Alignment c;
  c.entries.push_back({"X", 0, 0, 2});
  c.entries.push_back({"Y", 1, 2, 4});
  try {
    transcription_from_alignment("u", c, 0.01);
    FAIL("expected Error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::kInconsistentAlignment);
  }
}

TEST_CASE("encode_features recovers the generating templates") {
  auto sc = testing::make_feature_corpus(41, 2, 3, 4, 20);
  UnitInventory inv1 = stage1_train(sc.truth, sc.corpus, sc.cfg);
  UnitInventory inv = stage2_train(inv1, sc.corpus.features, sc.cfg);

  Transcription t = encode_features(inv, sc.corpus.features[0], sc.cfg, "utt0");
  CHECK(t.utterance_id == "utt0");
  CHECK(!t.tokens.empty());
  CHECK(t.tokens.front().start_frame == 0);
  CHECK(t.tokens.back().end_frame == sc.corpus.features[0].rows);
  for (size_t i = 1; i < t.tokens.size(); ++i)
    CHECK(t.tokens[i].start_frame == t.tokens[i - 1].end_frame);

  // Each true syllable should overlap at least one non-silence token.
  for (auto [b, e] : sc.spans[0]) {
    bool hit = false;
    for (const auto &tok : t.tokens) {
      if (tok.label == kSilenceLabel) continue;
      hit |= tok.start_frame < e && tok.end_frame > b;
    }
    CHECK(hit);
  }
}

TEST_CASE("exemplar store: build, lookup, round-trip and resynthesis") {
  // Hand-built setup: two units, waves with known sample spans.
  UnitInventory inv;
  inv.feature_dim = 1;
  inv.variance_floor = {1e-8};
  for (const char *label : {"P", "Q"}) {
    HmmUnit u;
    u.label = label;
    u.kind = UnitKind::kTransient;
    GaussianMixture g;
    g.dim = 1;
    g.weights = {1.0};
    g.means = {label[0] == 'P' ? 0.0 : 10.0};
    g.variances = {1.0};
    u.states.push_back(std::move(g));
    u.self_loop.push_back(0.5);
    inv.units.push_back(std::move(u));
  }
  HmmUnit sil;
  sil.label = kSilenceLabel;
  sil.kind = UnitKind::kSilence;
  {
    GaussianMixture g;
    g.dim = 1;
    g.weights = {1.0};
    g.means = {-5.0};
    g.variances = {1.0};
    sil.states.push_back(std::move(g));
    sil.self_loop.push_back(0.5);
  }
  inv.units.push_back(std::move(sil));

  const int rate = 16000;
  const double shift = 0.01;
  // One utterance, 40 frames: P over [0,20), Q over [20,40).
  FeatureMatrix f(40, 1);
  f.frame_shift = shift;
  for (int64_t t = 0; t < 40; ++t) f.at(t, 0) = t < 20 ? 0.0 : 10.0;
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(static_cast<size_t>(0.4 * rate), 0.25f);
  Alignment a;
  a.entries.push_back({"P", 0, 0, 20});
  a.entries.push_back({"Q", 0, 20, 40});

  PipelineConfig cfg;
  Rng rng(1);
  ExemplarStore store = build_exemplar_store(inv, {f}, {w}, {a}, cfg, rng);
  CHECK(store.sample_rate == rate);
  REQUIRE(store.find("P") != nullptr);
  REQUIRE(store.find("Q") != nullptr);
  CHECK(store.find(kSilenceLabel) == nullptr);  // silence has no exemplar
  // Each exemplar covers its 20-frame occurrence through the tail of the
  // last 25 ms analysis window: 19 * 160 + 400 samples, clamped to the wave.
  CHECK(store.find("P")->samples.size() == 3440);
  CHECK(store.find("Q")->samples.size() == 3200);  // clamped at the wave end

  // Round-trip through disk.
  TempDir dir("exemplars");
  save_exemplar_store(store, dir.str());
  ExemplarStore back = load_exemplar_store(dir.str());
  CHECK(back.sample_rate == rate);
  REQUIRE(back.find("P") != nullptr);
  CHECK(back.find("P")->samples.size() == store.find("P")->samples.size());
  CHECK(back.missing == store.missing);

  // Resynthesis arithmetic: sum of pieces minus one crossfade per junction.
  Transcription t;
  t.utterance_id = "u";
  t.frame_shift = shift;
  t.tokens = {{"P", 0, 20}, {kSilenceLabel, 20, 30}, {"Q", 30, 50}};
  double cf = 0.01;
  Waveform out = decode_exemplar(back, t, cf);
  int64_t s = static_cast<int64_t>(std::llround(0.1 * rate));
  int64_t fade = static_cast<int64_t>(std::llround(cf * rate));
  CHECK(static_cast<int64_t>(out.samples.size()) == 3440 + s + 3200 - 2 * fade);

  // Unknown unit labels are reported.
  Transcription bad;
  bad.utterance_id = "u";
  bad.frame_shift = shift;
  bad.tokens = {{"Z", 0, 10}};
  try {
    decode_exemplar(back, bad, cf);
    FAIL("expected Error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::kUnknownUnit);
  }

  // Empty transcriptions give empty audio.
  Transcription none;
  none.utterance_id = "u";
  none.frame_shift = shift;
  CHECK(decode_exemplar(back, none, cf).samples.empty());
}

TEST_CASE("missing units are listed instead of silently skipped") {
  UnitInventory inv;
  inv.feature_dim = 1;
  inv.variance_floor = {1e-8};
  for (const char *label : {"P", "Q"}) {
    HmmUnit u;
    u.label = label;
    u.kind = UnitKind::kTransient;
    GaussianMixture g;
    g.dim = 1;
    g.weights = {1.0};
    g.means = {0.0};
    g.variances = {1.0};
    u.states.push_back(std::move(g));
    u.self_loop.push_back(0.5);
    inv.units.push_back(std::move(u));
  }

  FeatureMatrix f(10, 1);
  f.frame_shift = 0.01;
  Waveform w;
  w.sample_rate = 8000;
  w.samples.assign(800, 0.1f);
  Alignment a;
  a.entries.push_back({"P", 0, 0, 10});  // Q never occurs

  Rng rng(2);
  ExemplarStore store = build_exemplar_store(inv, {f}, {w}, {a}, PipelineConfig{}, rng);
  CHECK(store.find("Q") == nullptr);
  REQUIRE(store.missing.size() == 1);
  CHECK(store.missing[0] == "Q");
}
