// tests/acceptance_test.cc
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
//
// Release gate: each numbered check prints exactly one [PASS]/[FAIL] line and
// the process exits non-zero if any check fails.  Tolerances are pinned here
// on purpose; loosening them is a behavior change, not a test fix.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common.h"
#include "config.h"
#include "dtw.h"
#include "graph.h"
#include "hmm.h"
#include "metrics.h"
#include "pipeline.h"
#include "rng.h"
#include "testutil.h"
#include "transcription.h"
#include "wave.h"

using namespace audkit;
using testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string &why) {
    ok = false;
    if (detail.empty()) detail = why;
  }
};

// --------------------------------------------------------------------------
// 1. DTW against exhaustive path enumeration.
// --------------------------------------------------------------------------
Outcome criterion_dtw_oracle() {
  Outcome out;
  auto start = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int pair = 0; pair < 500; ++pair) {
    int64_t dims = 1 + static_cast<int64_t>(rng.below(3));
    FeatureMatrix a = testing::random_features(rng, 1 + rng.below(6), dims);
    FeatureMatrix b = testing::random_features(rng, 1 + rng.below(6), dims);
    double got = dtw_distance(a, b);
    double want = testing::dtw_oracle(a, b);
    worst = std::max(worst, std::abs(got - want));
    if (std::abs(got - want) > 1e-9) {
      out.fail("pair " + std::to_string(pair) + " differs by " + std::to_string(got - want));
      return out;
    }
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 10.0) out.fail("took " + std::to_string(elapsed) + " s (budget 10 s)");
  std::ostringstream d;
  d << "500 pairs, max |diff| " << worst << ", " << elapsed << " s";
  if (out.ok) out.detail = d.str();
  return out;
}

// --------------------------------------------------------------------------
// 2. Connected components against BFS reachability.
// --------------------------------------------------------------------------
Outcome criterion_components_oracle() {
  Outcome out;
  Rng rng(1002);
  for (int trial = 0; trial < 200; ++trial) {
    int64_t n = 2 + static_cast<int64_t>(rng.below(49));  // up to 50 nodes
    int64_t k = 1 + static_cast<int64_t>(rng.below(6));
    DistanceMatrix d(n);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = i + 1; j < n; ++j) d.at(i, j) = d.at(j, i) = rng.uniform();

    NeighborGraph g = build_mutual_knn_graph(d, k);
    Clustering got = connected_components(g);
    Clustering want = testing::components_oracle(g);
    if (got.assignment != want.assignment || got.clusters != want.clusters) {
      out.fail("partition mismatch on trial " + std::to_string(trial) + " (n=" +
               std::to_string(n) + ", k=" + std::to_string(k) + ")");
      return out;
    }
  }
  out.detail = "200 graphs, partitions identical";
  return out;
}

// --------------------------------------------------------------------------
// 3. Unit-loop decode against brute force over label sequences.
// --------------------------------------------------------------------------
Outcome criterion_viterbi_oracle() {
  Outcome out;
  Rng rng(1003);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int64_t dims = 1 + static_cast<int64_t>(rng.below(3));
    UnitInventory inv = testing::random_single_state_inventory(rng, dims, 2);
    FeatureMatrix f = testing::random_features(rng, 1 + rng.below(8), dims);
    double pen = -3.0 * rng.uniform();

    DecodeOptions opt;
    opt.insertion_penalty = pen;
    Alignment dec = viterbi_decode(inv, f, opt);
    double want = testing::decode_oracle_single_state(inv, f, pen);
    double diff = std::abs(dec.total_log_likelihood - want);
    double rediff = std::abs(rescore_alignment(inv, f, dec, pen) - dec.total_log_likelihood);
    worst = std::max({worst, diff, rediff});
    if (diff > 1e-9) {
      out.fail("trial " + std::to_string(trial) + ": decode " +
               std::to_string(dec.total_log_likelihood) + " vs brute force " +
               std::to_string(want));
      return out;
    }
    if (rediff > 1e-9) {
      out.fail("trial " + std::to_string(trial) + ": path rescoring off by " +
               std::to_string(rediff));
      return out;
    }
  }
  std::ostringstream d;
  d << "100 inventories, max |diff| " << worst;
  out.detail = d.str();
  return out;
}

// --------------------------------------------------------------------------
// 4. Stage-1 likelihood trajectory: monotone, converged, fast.
// --------------------------------------------------------------------------
Outcome criterion_em_monotone() {
  Outcome out;
  auto start = Clock::now();
  for (int64_t dims = 1; dims <= 4; ++dims) {
    auto sc = testing::make_feature_corpus(2000 + static_cast<uint64_t>(dims), dims,
                                           /*templates=*/3, /*utts=*/4,
                                           /*instances=*/20);
    sc.cfg.stage1_max_iter = 15;
    UnitInventory inv = stage1_train(sc.truth, sc.corpus, sc.cfg);

    const auto &ll = inv.meta.log_likelihood;
    if (ll.size() < 2) {
      out.fail("dims " + std::to_string(dims) + ": trajectory too short");
      return out;
    }
    for (size_t i = 1; i < ll.size(); ++i)
      if (ll[i] < ll[i - 1] - 1e-6 * std::abs(ll[i - 1])) {
        out.fail("dims " + std::to_string(dims) + ": LL dropped at step " + std::to_string(i) +
                 " (" + std::to_string(ll[i - 1]) + " -> " + std::to_string(ll[i]) + ")");
        return out;
      }
    if (inv.meta.iterations > 15) {
      out.fail("dims " + std::to_string(dims) + ": " + std::to_string(inv.meta.iterations) +
               " iterations");
      return out;
    }
    double rel = std::abs(ll.back() - ll[ll.size() - 2]) /
                 std::max(std::abs(ll[ll.size() - 2]), 1e-300);
    if (rel > 1e-4) {
      out.fail("dims " + std::to_string(dims) + ": not converged, final rel change " +
               std::to_string(rel));
      return out;
    }
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 60.0) out.fail("took " + std::to_string(elapsed) + " s (budget 60 s)");
  if (out.ok)
    out.detail = "dims 1-4 monotone within 1e-6 and converged, " + std::to_string(elapsed) + " s";
  return out;
}

// Shared state between checks 5 and 6: the trained feature-space system.
struct RecoveredSystem {
  testing::SyntheticCorpus sc;
  UnitInventory system1;
  std::vector<Alignment> stage2_alignments;
};

RecoveredSystem train_recovered_system() {
  RecoveredSystem rs;
  rs.sc = testing::make_feature_corpus(3001, /*dims=*/3, /*templates=*/3, /*utts=*/4,
                                       /*instances=*/20);
  // Clusters come from the real discovery path: DTW + mutual-kNN components.
  DistanceMatrix d = pairwise_distances(rs.sc.corpus.segment_features, rs.sc.cfg.dtw_band,
                                        rs.sc.cfg.threads);
  NeighborGraph g = build_mutual_knn_graph(d, rs.sc.cfg.knn_k);
  Clustering clusters = connected_components(g);
  UnitInventory inv1 = stage1_train(clusters, rs.sc.corpus, rs.sc.cfg);
  rs.system1 = stage2_train(inv1, rs.sc.corpus.features, rs.sc.cfg, &rs.stage2_alignments);
  return rs;
}

// --------------------------------------------------------------------------
// 5. Template recovery on continuous speech.
// --------------------------------------------------------------------------
Outcome criterion_recovery(const RecoveredSystem &rs) {
  Outcome out;
  const auto &sc = rs.sc;

  // Rhyme token per true syllable, by max frame overlap.
  std::vector<std::string> syl_pred, syl_ref;
  std::map<std::string, std::map<std::string, int64_t>> vote;  // rhyme -> template -> n
  std::vector<std::vector<std::string>> hyp_rhymes(sc.corpus.features.size());
  for (size_t u = 0; u < sc.corpus.features.size(); ++u) {
    Transcription t = transcription_from_alignment(sc.corpus.ids[u], rs.stage2_alignments[u],
                                                   0.01);
    for (const auto &tok : t.tokens)
      if (tok.label.rfind("RH_", 0) == 0) hyp_rhymes[u].push_back(tok.label);

    for (size_t s = 0; s < sc.spans[u].size(); ++s) {
      auto [b, e] = sc.spans[u][s];
      std::string best = "<none>";
      int64_t best_overlap = 0;
      for (const auto &tok : t.tokens) {
        if (tok.label.rfind("RH_", 0) != 0) continue;
        int64_t ov = std::min(e, tok.end_frame) - std::max(b, tok.start_frame);
        if (ov > best_overlap) {
          best_overlap = ov;
          best = tok.label;
        }
      }
      std::string ref = "T" + std::to_string(sc.token_truth[u][s]);
      syl_pred.push_back(best);
      syl_ref.push_back(ref);
      if (best != "<none>") ++vote[best][ref];
    }
  }

  ClusterQuality q = cluster_quality(syl_pred, syl_ref);
  if (q.nmi < 0.8) out.fail("NMI " + std::to_string(q.nmi) + " < 0.8");

  // Majority-vote mapping from rhyme labels to templates, then sequence
  // accuracy of the decoded rhyme stream against the true template stream.
  std::map<std::string, std::string> to_template;
  for (const auto &[label, row] : vote) {
    std::string best;
    int64_t n = -1;
    for (const auto &[tpl, c] : row)
      if (c > n) {
        n = c;
        best = tpl;
      }
    to_template[label] = best;
  }
  std::vector<std::vector<std::string>> hyp(sc.corpus.features.size()),
      ref(sc.corpus.features.size());
  for (size_t u = 0; u < hyp.size(); ++u) {
    for (const auto &r : hyp_rhymes[u]) {
      auto it = to_template.find(r);
      hyp[u].push_back(it == to_template.end() ? "?" : it->second);
    }
    for (int64_t tpl : sc.token_truth[u]) ref[u].push_back("T" + std::to_string(tpl));
  }
  double acc = testing::token_accuracy(hyp, ref);
  if (acc < 0.9) out.fail("token accuracy " + std::to_string(acc) + " < 0.9");

  if (out.ok) {
    std::ostringstream d;
    d << "token accuracy " << acc << ", rhyme/template NMI " << q.nmi;
    out.detail = d.str();
  }
  return out;
}

// --------------------------------------------------------------------------
// 6. Merging lowers the bitrate; the formula matches the hand case.
// --------------------------------------------------------------------------
Outcome criterion_bitrate(const RecoveredSystem &rs) {
  Outcome out;

  // Hand case: 100 symbols uniform over 10 types in 10 s.
  std::vector<std::string> syms;
  for (int k = 0; k < 10; ++k)
    for (int i = 0; i < 10; ++i) syms.push_back("u" + std::to_string(k));
  double hand = bitrate_of_symbols(syms, 10.0);
  if (std::abs(hand - 33.219) > 1e-3) {
    out.fail("hand case gave " + std::to_string(hand) + " bits/s, expected 33.219");
    return out;
  }

  const auto &sc = rs.sc;
  int64_t speech_units = 0;
  for (const auto &u : rs.system1.units)
    if (u.kind != UnitKind::kSilence) ++speech_units;
  if (speech_units < 5) {
    out.fail("only " + std::to_string(speech_units) + " speech units before merging");
    return out;
  }

  PipelineConfig cfg = sc.cfg;
  Rng rng(static_cast<uint64_t>(cfg.seed));
  int64_t target = 4;  // below the pre-merge count
  MergeResult merged = merge_units(rs.system1, target, cfg, rng);
  PipelineConfig retrain_cfg = cfg;
  retrain_cfg.stage2_max_iter = 5;
  UnitInventory system2 = stage2_train(merged.inventory, sc.corpus.features, retrain_cfg);

  std::vector<Transcription> ts1, ts2;
  for (size_t u = 0; u < sc.corpus.features.size(); ++u) {
    ts1.push_back(encode_features(rs.system1, sc.corpus.features[u], cfg, sc.corpus.ids[u]));
    ts2.push_back(encode_features(system2, sc.corpus.features[u], cfg, sc.corpus.ids[u]));
  }
  double rate1 = bitrate(ts1, sc.corpus.total_duration_s);
  double rate2 = bitrate(ts2, sc.corpus.total_duration_s);
  if (!(rate2 < rate1))
    out.fail("merged bitrate " + std::to_string(rate2) + " not below unmerged " +
             std::to_string(rate1));

  if (out.ok) {
    std::ostringstream d;
    d << "bitrate " << rate1 << " -> " << rate2 << " bits/s (" << speech_units << " -> "
      << target << " units), hand case " << hand;
    out.detail = d.str();
  }
  return out;
}

// --------------------------------------------------------------------------
// 7. ABX behaves on separable and on indistinguishable categories.
// --------------------------------------------------------------------------
Outcome criterion_abx() {
  Outcome out;
  Rng rng(1007);
  auto sample = [&](double mean) {
    FeatureMatrix f(5 + static_cast<int64_t>(rng.below(5)), 2);
    f.frame_shift = 0.01;
    for (double &v : f.data) v = mean + 0.3 * rng.gaussian();
    return f;
  };

  std::vector<AbxTriplet> separable, identical;
  for (int i = 0; i < 1000; ++i) {
    separable.push_back({sample(0.0), sample(5.0), sample(0.0)});
    identical.push_back({sample(1.0), sample(1.0), sample(1.0)});
  }
  double err_sep = abx_error(separable, 0, 2);
  double err_same = abx_error(identical, 0, 2);
  if (err_sep > 0.05)
    out.fail("separable categories scored " + std::to_string(err_sep) + " > 0.05");
  if (std::abs(err_same - 0.5) > 0.05)
    out.fail("identical categories scored " + std::to_string(err_same) + ", expected 0.5±0.05");
  if (out.ok) {
    std::ostringstream d;
    d << "separable " << err_sep << ", identical " << err_same << " over 1000 triplets";
    out.detail = d.str();
  }
  return out;
}

// --------------------------------------------------------------------------
// 8. Exemplar round-trip and concatenation arithmetic.
// --------------------------------------------------------------------------
Outcome criterion_roundtrip() {
  Outcome out;
  TempDir dir("accept_roundtrip");
  Rng wav_rng(1008);
  auto corpus = testing::make_audio_corpus(wav_rng, dir, /*types=*/3, /*train=*/6,
                                           /*syl_per_utt=*/4);

  RunOptions opt;
  opt.model_dir = dir.file("model");
  opt.manifest_path = corpus.manifest_path;
  opt.overrides = {{"threads", "2"}, {"seed", "7"}};
  run_discover(opt);

  UnitInventory inv = load_inventory(opt.model_dir + "/inventory_stage2.json");
  PipelineConfig cfg = load_config(opt.model_dir + "/pipeline_config.json");
  FeatureStats stats = load_feature_stats(opt.model_dir + "/feature_stats.json");
  ExemplarStore store = load_exemplar_store(opt.model_dir + "/exemplars");

  int64_t with_exemplar = 0, recovered = 0;
  for (const auto &[label, wave] : store.exemplars) {
    ++with_exemplar;
    try {
      Transcription t = encode_waveform(inv, wave, cfg, "exemplar", &stats);
      for (const auto &tok : t.tokens)
        if (tok.label == label) {
          ++recovered;
          break;
        }
    } catch (const Error &) {
      // an undecodable exemplar counts as a miss
    }
  }
  if (with_exemplar == 0) {
    out.fail("no exemplars were built");
    return out;
  }
  double frac = static_cast<double>(recovered) / static_cast<double>(with_exemplar);
  if (frac < 0.8)
    out.fail("only " + std::to_string(recovered) + "/" + std::to_string(with_exemplar) +
             " exemplars re-encode to their own unit");

  // Duration arithmetic, integer-exact: sum of pieces minus one crossfade
  // per junction, silence rendered from the token span.
  ExemplarStore hand;
  hand.sample_rate = 16000;
  Waveform p1, p2;
  p1.sample_rate = p2.sample_rate = 16000;
  p1.samples.assign(3200, 0.3f);
  p2.samples.assign(2400, -0.2f);
  hand.exemplars.emplace_back("A", p1);
  hand.exemplars.emplace_back("B", p2);

  Transcription t;
  t.utterance_id = "hand";
  t.frame_shift = 0.01;
  t.tokens = {{"A", 0, 20}, {kSilenceLabel, 20, 35}, {"B", 35, 50}};
  int64_t silence_len = 2400;  // 15 frames at 0.01 s, 16 kHz

  Waveform joined = decode_exemplar(hand, t, 0.01);
  int64_t want = 3200 + silence_len + 2400 - 2 * 160;
  if (static_cast<int64_t>(joined.samples.size()) != want) {
    out.fail("crossfaded length " + std::to_string(joined.samples.size()) + ", expected " +
             std::to_string(want));
    return out;
  }
  Waveform butted = decode_exemplar(hand, t, 0.0);
  if (static_cast<int64_t>(butted.samples.size()) != 3200 + silence_len + 2400) {
    out.fail("zero-crossfade length " + std::to_string(butted.samples.size()));
    return out;
  }
  if (out.ok) {
    std::ostringstream d;
    d << recovered << "/" << with_exemplar
      << " exemplars recovered by encode, duration arithmetic exact";
    out.detail = d.str();
  }
  return out;
}

// --------------------------------------------------------------------------
// 9. Byte-identical artifacts across reruns.
// --------------------------------------------------------------------------
Outcome criterion_determinism() {
  Outcome out;
  TempDir dir("accept_determinism");
  Rng wav_rng(1009);
  auto corpus = testing::make_audio_corpus(wav_rng, dir, /*types=*/3, /*train=*/6,
                                           /*syl_per_utt=*/4, /*n_test=*/2);

  auto run_once = [&](const std::string &model) {
    RunOptions opt;
    opt.model_dir = model;
    opt.manifest_path = corpus.manifest_path;
    opt.overrides = {{"threads", "2"}, {"seed", "7"}};
    run_discover(opt);
    EvalRunOptions ev;
    ev.model_dir = model;
    ev.manifest_path = corpus.manifest_path;
    ev.split = "test";
    ev.overrides = opt.overrides;
    run_eval(ev);
  };
  run_once(dir.file("model_a"));
  run_once(dir.file("model_b"));

  for (const char *name : {"inventory_stage1.json", "inventory_stage2.json",
                           "metrics_system1.json", "metrics_system1.csv", "run_meta.json",
                           "feature_stats.json"}) {
    std::string a = testing::read_file(dir.file("model_a") + "/" + name);
    std::string b = testing::read_file(dir.file("model_b") + "/" + name);
    if (a.empty()) {
      out.fail(std::string(name) + " missing or empty");
      return out;
    }
    if (a != b) {
      out.fail(std::string(name) + " differs between identical runs");
      return out;
    }
  }
  out.detail = "inventories, metric reports and run metadata byte-identical";
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int index;
    const char *name;
    std::function<Outcome()> run;
  };

  // Checks 5 and 6 share one trained system; train it lazily so a crash in
  // training fails both lines instead of aborting the whole gate.
  std::unique_ptr<RecoveredSystem> shared;
  auto shared_system = [&]() -> RecoveredSystem & {
    if (!shared) shared = std::make_unique<RecoveredSystem>(train_recovered_system());
    return *shared;
  };

  std::vector<Entry> entries = {
      {1, "dtw-exhaustive-oracle", criterion_dtw_oracle},
      {2, "components-bfs-oracle", criterion_components_oracle},
      {3, "decode-brute-force-oracle", criterion_viterbi_oracle},
      {4, "segmental-em-monotone", criterion_em_monotone},
      {5, "template-recovery",
       [&] {
         auto start = Clock::now();
         Outcome o = criterion_recovery(shared_system());
         if (seconds_since(start) >= 300.0) o.fail("exceeded the 5 min budget");
         return o;
       }},
      {6, "bitrate-ordering", [&] { return criterion_bitrate(shared_system()); }},
      {7, "abx-sanity", criterion_abx},
      {8, "exemplar-roundtrip", criterion_roundtrip},
      {9, "determinism", criterion_determinism},
  };

  int failures = 0;
  for (auto &e : entries) {
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception &ex) {
      o.ok = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    if (!o.ok) ++failures;
    std::printf("[%s] %d %s%s%s\n", o.ok ? "PASS" : "FAIL", e.index, e.name,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
  }
  if (failures) std::printf("%d of 9 checks failed\n", failures);
  return failures == 0 ? 0 : 1;
}
