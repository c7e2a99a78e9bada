// src/hmm.cc
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

#include "hmm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace audkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kMinVarianceFloor = 1e-10;

double log_gaussian(const double *x, const double *mean, const double *var, int64_t dim) {
  double acc = 0.0;
  for (int64_t d = 0; d < dim; ++d) {
    double diff = x[d] - mean[d];
    acc += std::log(var[d]) + diff * diff / var[d];
  }
  return -0.5 * (dim * kLog2Pi + acc);
}

}  // namespace

double log_emission(const GaussianMixture &g, const double *frame, int64_t dim) {
  require(dim == g.dim, Status::kDimensionMismatch, "frame dim ", dim, " vs mixture dim ", g.dim);
  thread_local std::vector<double> lp;
  lp.resize(static_cast<size_t>(g.num_components()));
  double top = -kInf;
  for (int64_t m = 0; m < g.num_components(); ++m) {
    double w = g.weights[static_cast<size_t>(m)];
    double v = w > 0.0 ? std::log(w) + log_gaussian(frame, g.mean(m), g.variance(m), dim) : -kInf;
    lp[static_cast<size_t>(m)] = v;
    if (v > top) top = v;
  }
  if (top == -kInf) return -kInf;
  double acc = 0.0;
  for (double v : lp) acc += std::exp(v - top);
  return top + std::log(acc);
}

const char *unit_kind_name(UnitKind k) {
  switch (k) {
    case UnitKind::kOnset: return "onset";
    case UnitKind::kRhyme: return "rhyme";
    case UnitKind::kOffset: return "offset";
    case UnitKind::kSilence: return "silence";
    case UnitKind::kTransient: return "transient";
    case UnitKind::kSteady: return "steady";
  }
  return "onset";
}

UnitKind unit_kind_from_name(const std::string &name) {
  for (UnitKind k : {UnitKind::kOnset, UnitKind::kRhyme, UnitKind::kOffset, UnitKind::kSilence,
                     UnitKind::kTransient, UnitKind::kSteady})
    if (name == unit_kind_name(k)) return k;
  throw_error(Status::kParseError, "unknown unit kind \"", name, "\"");
}

int64_t UnitInventory::index_of(const std::string &label) const {
  for (size_t i = 0; i < units.size(); ++i)
    if (units[i].label == label) return static_cast<int64_t>(i);
  return -1;
}

const HmmUnit &UnitInventory::unit(const std::string &label) const {
  int64_t i = index_of(label);
  require(i >= 0, Status::kUnknownLabel, "no unit \"", label, "\" in inventory");
  return units[static_cast<size_t>(i)];
}

std::vector<double> compute_variance_floor(const std::vector<const FeatureMatrix *> &data,
                                           double scale) {
  require(!data.empty() && data[0] && !data[0]->empty(), Status::kEmptyInput,
          "variance floor needs at least one frame");
  const int64_t dim = data[0]->cols;
  std::vector<double> gsum(static_cast<size_t>(dim), 0.0), gsq(static_cast<size_t>(dim), 0.0);
  int64_t g_frames = 0;
  for (const FeatureMatrix *s : data) {
    require(s && s->cols == dim, Status::kDimensionMismatch, "mixed feature dims");
    for (int64_t t = 0; t < s->rows; ++t) {
      const double *x = s->row(t);
      for (int64_t d = 0; d < dim; ++d) {
        gsum[static_cast<size_t>(d)] += x[d];
        gsq[static_cast<size_t>(d)] += x[d] * x[d];
      }
    }
    g_frames += s->rows;
  }
  std::vector<double> floor(static_cast<size_t>(dim));
  for (int64_t d = 0; d < dim; ++d) {
    double mean = gsum[static_cast<size_t>(d)] / g_frames;
    double var = gsq[static_cast<size_t>(d)] / g_frames - mean * mean;
    floor[static_cast<size_t>(d)] = std::max(var * scale, kMinVarianceFloor);
  }
  return floor;
}

bool flat_start_feasible(int64_t frames, const std::vector<double> &fractions,
                         int64_t states_per_unit) {
  double cum = 0.0;
  int64_t prev = 0;
  for (size_t r = 0; r < fractions.size(); ++r) {
    cum += fractions[r];
    int64_t edge = r + 1 == fractions.size() ? frames
                                             : std::lround(cum * static_cast<double>(frames));
    if (edge - prev < states_per_unit) return false;
    prev = edge;
  }
  return true;
}

std::vector<HmmUnit> flat_start_units(const std::vector<const FeatureMatrix *> &segments,
                                      const FlatStartOptions &opt,
                                      std::vector<double> *variance_floor_out) {
  const size_t n_regions = opt.fractions.size();
  require(n_regions >= 1 && opt.labels.size() == n_regions && opt.kinds.size() == n_regions,
          Status::kInvalidConfig, "need one label and kind per region fraction");
  double frac_sum = 0.0;
  for (double f : opt.fractions) {
    require(f > 0.0, Status::kInvalidConfig, "region fractions must be positive");
    frac_sum += f;
  }
  require(std::abs(frac_sum - 1.0) <= 1e-9, Status::kInvalidConfig,
          "region fractions must sum to 1, got ", frac_sum);
  require(opt.states_per_unit >= 1, Status::kInvalidConfig, "states_per_unit must be >= 1");
  require(!segments.empty(), Status::kEmptyInput, "flat start needs at least one segment");

  const int64_t dim = segments[0]->cols;
  for (const FeatureMatrix *s : segments)
    require(s && !s->empty() && s->cols == dim, Status::kDimensionMismatch,
            "segments must be non-empty with a common feature dim");

  std::vector<double> floor = opt.variance_floor;
  if (floor.empty()) {
    floor = compute_variance_floor(segments, opt.variance_floor_scale);
  } else {
    require(static_cast<int64_t>(floor.size()) == dim, Status::kInvalidConfig,
            "variance floor has wrong dimension");
  }

  // Region boundaries by cumulative fractions; pooled first/second moments.
  std::vector<std::vector<double>> rsum(n_regions, std::vector<double>(static_cast<size_t>(dim), 0.0));
  std::vector<std::vector<double>> rsq(n_regions, std::vector<double>(static_cast<size_t>(dim), 0.0));
  std::vector<int64_t> rcount(n_regions, 0);
  for (size_t si = 0; si < segments.size(); ++si) {
    const FeatureMatrix &s = *segments[si];
    std::vector<int64_t> bounds(n_regions + 1, 0);
    double cum = 0.0;
    for (size_t r = 0; r + 1 < n_regions; ++r) {
      cum += opt.fractions[r];
      bounds[r + 1] = std::lround(cum * static_cast<double>(s.rows));
    }
    bounds[n_regions] = s.rows;
    for (size_t r = 0; r < n_regions; ++r) {
      int64_t len = bounds[r + 1] - bounds[r];
      require(len >= opt.states_per_unit, Status::kSegmentTooShort, "segment ", si, " (",
              s.rows, " frames) leaves region ", r, " with ", len, " frames for ",
              opt.states_per_unit, " states");
      for (int64_t t = bounds[r]; t < bounds[r + 1]; ++t) {
        const double *x = s.row(t);
        for (int64_t d = 0; d < dim; ++d) {
          rsum[r][static_cast<size_t>(d)] += x[d];
          rsq[r][static_cast<size_t>(d)] += x[d] * x[d];
        }
      }
      rcount[r] += len;
    }
  }

  std::vector<HmmUnit> units(n_regions);
  for (size_t r = 0; r < n_regions; ++r) {
    GaussianMixture g;
    g.dim = dim;
    g.weights = {1.0};
    g.means.resize(static_cast<size_t>(dim));
    g.variances.resize(static_cast<size_t>(dim));
    for (int64_t d = 0; d < dim; ++d) {
      double mean = rsum[r][static_cast<size_t>(d)] / rcount[r];
      double var = rsq[r][static_cast<size_t>(d)] / rcount[r] - mean * mean;
      g.means[static_cast<size_t>(d)] = mean;
      g.variances[static_cast<size_t>(d)] = std::max(var, floor[static_cast<size_t>(d)]);
    }
    HmmUnit &u = units[r];
    u.label = opt.labels[r];
    u.kind = opt.kinds[r];
    u.states.assign(static_cast<size_t>(opt.states_per_unit), g);
    u.self_loop.assign(static_cast<size_t>(opt.states_per_unit), 0.5);
  }
  if (variance_floor_out) *variance_floor_out = std::move(floor);
  return units;
}

Alignment viterbi_align(const UnitInventory &inv, const FeatureMatrix &f,
                        const std::vector<std::string> &transcript) {
  require(!transcript.empty(), Status::kEmptyInput, "transcript is empty");
  require(f.cols == inv.feature_dim, Status::kDimensionMismatch, "features have dim ", f.cols,
          ", inventory expects ", inv.feature_dim);
  const int64_t t_max = f.rows;

  // Concatenate the named units into one left-to-right chain.
  struct ChainState {
    int64_t unit, state;
  };
  std::vector<ChainState> chain;
  for (const std::string &label : transcript) {
    int64_t u = inv.index_of(label);
    require(u >= 0, Status::kUnknownLabel, "no unit \"", label, "\" in inventory");
    for (int64_t k = 0; k < inv.units[static_cast<size_t>(u)].num_states(); ++k)
      chain.push_back({u, k});
  }
  const int64_t n_chain = static_cast<int64_t>(chain.size());
  require(t_max >= n_chain, Status::kInfeasibleAlignment, "transcript needs ", n_chain,
          " frames, sequence has ", t_max);

  std::vector<double> log_self(static_cast<size_t>(n_chain)), log_adv(static_cast<size_t>(n_chain));
  for (int64_t s = 0; s < n_chain; ++s) {
    double p = inv.units[static_cast<size_t>(chain[static_cast<size_t>(s)].unit)]
                   .self_loop[static_cast<size_t>(chain[static_cast<size_t>(s)].state)];
    log_self[static_cast<size_t>(s)] = std::log(p);
    log_adv[static_cast<size_t>(s)] = std::log(1.0 - p);
  }

  std::vector<double> prev(static_cast<size_t>(n_chain), -kInf), cur(static_cast<size_t>(n_chain));
  std::vector<uint8_t> back(static_cast<size_t>(t_max * n_chain), 0);  // 1 = advanced into s
  {
    const auto &g = inv.units[static_cast<size_t>(chain[0].unit)].states[static_cast<size_t>(chain[0].state)];
    prev[0] = log_emission(g, f.row(0), f.cols);
  }
  for (int64_t t = 1; t < t_max; ++t) {
    for (int64_t s = 0; s < n_chain; ++s) {
      double best = prev[static_cast<size_t>(s)] + log_self[static_cast<size_t>(s)];
      uint8_t bp = 0;
      if (s > 0) {
        double cand = prev[static_cast<size_t>(s - 1)] + log_adv[static_cast<size_t>(s - 1)];
        if (cand > best) {
          best = cand;
          bp = 1;
        }
      }
      if (best == -kInf) {
        cur[static_cast<size_t>(s)] = -kInf;
        continue;
      }
      const auto &cs = chain[static_cast<size_t>(s)];
      const auto &g = inv.units[static_cast<size_t>(cs.unit)].states[static_cast<size_t>(cs.state)];
      cur[static_cast<size_t>(s)] = best + log_emission(g, f.row(t), f.cols);
      back[static_cast<size_t>(t * n_chain + s)] = bp;
    }
    std::swap(prev, cur);
  }
  double score = prev[static_cast<size_t>(n_chain - 1)];
  require(score != -kInf, Status::kInfeasibleAlignment, "no path through the transcript chain");

  std::vector<int64_t> path(static_cast<size_t>(t_max));
  int64_t s = n_chain - 1;
  for (int64_t t = t_max - 1; t >= 1; --t) {
    path[static_cast<size_t>(t)] = s;
    s -= back[static_cast<size_t>(t * n_chain + s)];
  }
  path[0] = s;

  Alignment a;
  a.total_log_likelihood = score;
  int64_t start = 0;
  for (int64_t t = 1; t <= t_max; ++t) {
    if (t < t_max && path[static_cast<size_t>(t)] == path[static_cast<size_t>(t - 1)]) continue;
    const auto &cs = chain[static_cast<size_t>(path[static_cast<size_t>(t - 1)])];
    a.entries.push_back({inv.units[static_cast<size_t>(cs.unit)].label, cs.state, start, t});
    start = t;
  }
  return a;
}

namespace {

// Which unit kind may follow which when the decode grammar is constrained to
// syllable-shaped sequences.  Silence is reachable once a syllable has
// closed; onsets/rhymes must complete their syllable first.
bool kind_may_follow(UnitKind from, UnitKind to) {
  switch (from) {
    case UnitKind::kOnset: return to == UnitKind::kRhyme;
    case UnitKind::kRhyme: return to == UnitKind::kOffset;
    case UnitKind::kOffset: return to == UnitKind::kOnset || to == UnitKind::kSilence;
    case UnitKind::kTransient:
      return to == UnitKind::kSteady || to == UnitKind::kTransient || to == UnitKind::kSilence;
    case UnitKind::kSteady: return to == UnitKind::kTransient;
    case UnitKind::kSilence:
      return to == UnitKind::kOnset || to == UnitKind::kTransient || to == UnitKind::kSilence;
  }
  return true;
}

struct ExitBest {
  double score = -kInf;
  int64_t pos = -1;  // position in the active-unit list
};

}  // namespace

Alignment viterbi_decode(const UnitInventory &inv, const FeatureMatrix &f,
                         const DecodeOptions &opt) {
  require(f.rows >= 1, Status::kEmptyInput, "cannot decode an empty feature sequence");
  require(f.cols == inv.feature_dim, Status::kDimensionMismatch, "features have dim ", f.cols,
          ", inventory expects ", inv.feature_dim);

  std::vector<int64_t> active;
  if (opt.active.empty()) {
    active.resize(inv.units.size());
    for (size_t i = 0; i < inv.units.size(); ++i) active[i] = static_cast<int64_t>(i);
  } else {
    for (const std::string &label : opt.active) {
      int64_t u = inv.index_of(label);
      require(u >= 0, Status::kUnknownLabel, "no unit \"", label, "\" in inventory");
      active.push_back(u);
    }
  }
  require(!active.empty(), Status::kEmptyInput, "no active units to decode with");

  const int64_t n_active = static_cast<int64_t>(active.size());
  const int64_t t_max = f.rows;
  std::vector<int64_t> base(static_cast<size_t>(n_active));
  int64_t n_states = 0;
  for (int64_t a = 0; a < n_active; ++a) {
    base[static_cast<size_t>(a)] = n_states;
    n_states += inv.units[static_cast<size_t>(active[static_cast<size_t>(a)])].num_states();
  }

  std::vector<double> log_self(static_cast<size_t>(n_states)), log_adv(static_cast<size_t>(n_states));
  std::vector<const GaussianMixture *> mix(static_cast<size_t>(n_states));
  std::vector<int64_t> state_of(static_cast<size_t>(n_states)), apos_of(static_cast<size_t>(n_states));
  for (int64_t a = 0; a < n_active; ++a) {
    const HmmUnit &u = inv.units[static_cast<size_t>(active[static_cast<size_t>(a)])];
    for (int64_t k = 0; k < u.num_states(); ++k) {
      int64_t s = base[static_cast<size_t>(a)] + k;
      log_self[static_cast<size_t>(s)] = std::log(u.self_loop[static_cast<size_t>(k)]);
      log_adv[static_cast<size_t>(s)] = std::log(1.0 - u.self_loop[static_cast<size_t>(k)]);
      mix[static_cast<size_t>(s)] = &u.states[static_cast<size_t>(k)];
      state_of[static_cast<size_t>(s)] = k;
      apos_of[static_cast<size_t>(s)] = a;
    }
  }

  // Emission table up front; the DP below touches every (t, s) anyway.
  std::vector<double> emis(static_cast<size_t>(t_max * n_states));
  for (int64_t t = 0; t < t_max; ++t)
    for (int64_t s = 0; s < n_states; ++s)
      emis[static_cast<size_t>(t * n_states + s)] = log_emission(*mix[static_cast<size_t>(s)], f.row(t), f.cols);

  std::vector<double> prev(static_cast<size_t>(n_states), -kInf), cur(static_cast<size_t>(n_states));
  std::vector<int32_t> back(static_cast<size_t>(t_max * n_states), -1);
  std::vector<uint8_t> entered(static_cast<size_t>(t_max * n_states), 0);

  for (int64_t a = 0; a < n_active; ++a) {
    int64_t s = base[static_cast<size_t>(a)];
    prev[static_cast<size_t>(s)] = opt.insertion_penalty + emis[static_cast<size_t>(s)];
    entered[static_cast<size_t>(s)] = 1;
  }

  constexpr int kNumKinds = 6;
  for (int64_t t = 1; t < t_max; ++t) {
    // Best exit score from the previous frame, overall and per source kind.
    ExitBest all;
    ExitBest by_kind[kNumKinds];
    for (int64_t a = 0; a < n_active; ++a) {
      const HmmUnit &u = inv.units[static_cast<size_t>(active[static_cast<size_t>(a)])];
      int64_t s_exit = base[static_cast<size_t>(a)] + u.num_states() - 1;
      double v = prev[static_cast<size_t>(s_exit)] + log_adv[static_cast<size_t>(s_exit)];
      if (v > all.score) all = {v, a};
      ExitBest &kb = by_kind[static_cast<int>(u.kind)];
      if (v > kb.score) kb = {v, a};
    }

    for (int64_t a = 0; a < n_active; ++a) {
      const HmmUnit &u = inv.units[static_cast<size_t>(active[static_cast<size_t>(a)])];
      for (int64_t k = 0; k < u.num_states(); ++k) {
        int64_t s = base[static_cast<size_t>(a)] + k;
        double best = prev[static_cast<size_t>(s)] + log_self[static_cast<size_t>(s)];
        int32_t bp = static_cast<int32_t>(s);
        uint8_t ent = 0;
        if (k > 0) {
          double cand = prev[static_cast<size_t>(s - 1)] + log_adv[static_cast<size_t>(s - 1)];
          if (cand > best) {
            best = cand;
            bp = static_cast<int32_t>(s - 1);
          }
        } else {
          ExitBest entry = all;
          if (opt.sequence_constraint) {
            entry = ExitBest{};
            for (int kind = 0; kind < kNumKinds; ++kind) {
              if (!kind_may_follow(static_cast<UnitKind>(kind), u.kind)) continue;
              const ExitBest &kb = by_kind[kind];
              if (kb.pos < 0) continue;
              if (kb.score > entry.score || (kb.score == entry.score && kb.pos < entry.pos))
                entry = kb;
            }
          }
          if (entry.pos >= 0) {
            double cand = entry.score + opt.insertion_penalty;
            if (cand > best) {
              best = cand;
              const HmmUnit &src = inv.units[static_cast<size_t>(active[static_cast<size_t>(entry.pos)])];
              bp = static_cast<int32_t>(base[static_cast<size_t>(entry.pos)] + src.num_states() - 1);
              ent = 1;
            }
          }
        }
        if (best == -kInf) {
          cur[static_cast<size_t>(s)] = -kInf;
          continue;
        }
        cur[static_cast<size_t>(s)] = best + emis[static_cast<size_t>(t * n_states + s)];
        back[static_cast<size_t>(t * n_states + s)] = bp;
        entered[static_cast<size_t>(t * n_states + s)] = ent;
      }
    }
    std::swap(prev, cur);
  }

  // The path must close some unit: end in a final state.
  double best_score = -kInf;
  int64_t best_state = -1;
  for (int64_t a = 0; a < n_active; ++a) {
    const HmmUnit &u = inv.units[static_cast<size_t>(active[static_cast<size_t>(a)])];
    int64_t s = base[static_cast<size_t>(a)] + u.num_states() - 1;
    if (prev[static_cast<size_t>(s)] > best_score) {
      best_score = prev[static_cast<size_t>(s)];
      best_state = s;
    }
  }
  require(best_state >= 0 && best_score != -kInf, Status::kInfeasibleAlignment,
          "no unit completes within ", t_max, " frames");

  std::vector<int64_t> path(static_cast<size_t>(t_max));
  std::vector<uint8_t> path_entered(static_cast<size_t>(t_max), 0);
  int64_t s = best_state;
  for (int64_t t = t_max - 1; t >= 1; --t) {
    path[static_cast<size_t>(t)] = s;
    path_entered[static_cast<size_t>(t)] = entered[static_cast<size_t>(t * n_states + s)];
    s = back[static_cast<size_t>(t * n_states + s)];
  }
  path[0] = s;
  path_entered[0] = 1;

  Alignment out;
  out.total_log_likelihood = best_score;
  int64_t start = 0;
  for (int64_t t = 1; t <= t_max; ++t) {
    bool boundary = t == t_max || path[static_cast<size_t>(t)] != path[static_cast<size_t>(t - 1)] ||
                    path_entered[static_cast<size_t>(t)];
    if (!boundary) continue;
    int64_t ps = path[static_cast<size_t>(t - 1)];
    const HmmUnit &u = inv.units[static_cast<size_t>(active[static_cast<size_t>(apos_of[static_cast<size_t>(ps)])])];
    out.entries.push_back({u.label, state_of[static_cast<size_t>(ps)], start, t});
    start = t;
  }
  return out;
}

namespace {

// Validates tiling/labels and reports each entry's unit index; throws
// InconsistentAlignment on structural problems.
std::vector<int64_t> check_alignment(const UnitInventory &inv, const FeatureMatrix &f,
                                     const Alignment &a) {
  require(!a.entries.empty(), Status::kInconsistentAlignment, "alignment has no entries");
  std::vector<int64_t> unit_idx(a.entries.size());
  int64_t cursor = 0;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const AlignmentEntry &e = a.entries[i];
    int64_t u = inv.index_of(e.label);
    require(u >= 0, Status::kInconsistentAlignment, "alignment names unknown unit \"", e.label,
            "\"");
    const HmmUnit &unit = inv.units[static_cast<size_t>(u)];
    require(e.state >= 0 && e.state < unit.num_states(), Status::kInconsistentAlignment,
            "state ", e.state, " out of range for unit \"", e.label, "\"");
    require(e.start_frame == cursor && e.end_frame > e.start_frame, Status::kInconsistentAlignment,
            "entries must tile the utterance; entry ", i, " spans [", e.start_frame, ", ",
            e.end_frame, ") at cursor ", cursor);
    if (i == 0)
      require(e.state == 0, Status::kInconsistentAlignment, "alignment must start in state 0");
    if (i > 0) {
      const AlignmentEntry &p = a.entries[i - 1];
      const HmmUnit &pu = inv.units[static_cast<size_t>(unit_idx[i - 1])];
      bool advance = e.label == p.label && e.state == p.state + 1;
      bool re_entry = e.state == 0 && p.state == pu.num_states() - 1;
      require(advance || re_entry, Status::kInconsistentAlignment, "entry ", i,
              " does not follow a left-to-right transition");
    }
    cursor = e.end_frame;
    unit_idx[i] = u;
  }
  require(cursor == f.rows, Status::kInconsistentAlignment, "alignment covers ", cursor,
          " frames of ", f.rows);
  return unit_idx;
}

}  // namespace

double rescore_alignment(const UnitInventory &inv, const FeatureMatrix &f, const Alignment &a,
                         double insertion_penalty) {
  require(f.cols == inv.feature_dim, Status::kDimensionMismatch, "features have dim ", f.cols,
          ", inventory expects ", inv.feature_dim);
  std::vector<int64_t> unit_idx = check_alignment(inv, f, a);
  double score = 0.0;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const AlignmentEntry &e = a.entries[i];
    const HmmUnit &u = inv.units[static_cast<size_t>(unit_idx[i])];
    const GaussianMixture &g = u.states[static_cast<size_t>(e.state)];
    for (int64_t t = e.start_frame; t < e.end_frame; ++t)
      score += log_emission(g, f.row(t), f.cols);
    double self = u.self_loop[static_cast<size_t>(e.state)];
    score += static_cast<double>(e.end_frame - e.start_frame - 1) * std::log(self);
    if (i + 1 < a.entries.size()) score += std::log(1.0 - self);
    bool occurrence_start = i == 0 || e.state == 0;
    if (occurrence_start) score += insertion_penalty;
  }
  return score;
}

namespace {

struct StateAcc {
  std::vector<double> occ, sum, sumsq;  // per component / component x dim
  double trans_self = 0.0, trans_adv = 0.0;
  int64_t frames = 0;

  void init(int64_t components, int64_t dim) {
    occ.assign(static_cast<size_t>(components), 0.0);
    sum.assign(static_cast<size_t>(components * dim), 0.0);
    sumsq.assign(static_cast<size_t>(components * dim), 0.0);
  }
  void merge(const StateAcc &o) {
    for (size_t i = 0; i < occ.size(); ++i) occ[i] += o.occ[i];
    for (size_t i = 0; i < sum.size(); ++i) sum[i] += o.sum[i];
    for (size_t i = 0; i < sumsq.size(); ++i) sumsq[i] += o.sumsq[i];
    trans_self += o.trans_self;
    trans_adv += o.trans_adv;
    frames += o.frames;
  }
};

void accumulate_frame(const GaussianMixture &g, const double *x, StateAcc &acc) {
  const int64_t n_comp = g.num_components();
  const int64_t dim = g.dim;
  thread_local std::vector<double> lp;
  lp.resize(static_cast<size_t>(n_comp));
  double top = -kInf;
  for (int64_t m = 0; m < n_comp; ++m) {
    double w = g.weights[static_cast<size_t>(m)];
    lp[static_cast<size_t>(m)] =
        w > 0.0 ? std::log(w) + log_gaussian(x, g.mean(m), g.variance(m), dim) : -kInf;
    if (lp[static_cast<size_t>(m)] > top) top = lp[static_cast<size_t>(m)];
  }
  double norm = 0.0;
  for (int64_t m = 0; m < n_comp; ++m) norm += std::exp(lp[static_cast<size_t>(m)] - top);
  for (int64_t m = 0; m < n_comp; ++m) {
    double r = std::exp(lp[static_cast<size_t>(m)] - top) / norm;
    acc.occ[static_cast<size_t>(m)] += r;
    double *s = acc.sum.data() + m * dim;
    double *q = acc.sumsq.data() + m * dim;
    for (int64_t d = 0; d < dim; ++d) {
      s[d] += r * x[d];
      q[d] += r * x[d] * x[d];
    }
  }
  acc.frames += 1;
}

// Doubles the heaviest components (means nudged by +-0.2 sigma) until the
// target count is reached.
void mix_up(GaussianMixture &g, int64_t target) {
  while (g.num_components() < target) {
    int64_t heaviest = 0;
    for (int64_t m = 1; m < g.num_components(); ++m)
      if (g.weights[static_cast<size_t>(m)] > g.weights[static_cast<size_t>(heaviest)]) heaviest = m;
    const int64_t dim = g.dim;
    std::vector<double> mean_lo(static_cast<size_t>(dim)), var_copy(static_cast<size_t>(dim));
    for (int64_t d = 0; d < dim; ++d) {
      double sigma = std::sqrt(g.variance(heaviest)[d]);
      mean_lo[static_cast<size_t>(d)] = g.mean(heaviest)[d] - 0.2 * sigma;
      var_copy[static_cast<size_t>(d)] = g.variance(heaviest)[d];
      g.means[static_cast<size_t>(heaviest * dim + d)] += 0.2 * sigma;
    }
    g.weights[static_cast<size_t>(heaviest)] *= 0.5;
    g.weights.push_back(g.weights[static_cast<size_t>(heaviest)]);
    g.means.insert(g.means.end(), mean_lo.begin(), mean_lo.end());
    g.variances.insert(g.variances.end(), var_copy.begin(), var_copy.end());
  }
}

}  // namespace

UnitInventory reestimate(const UnitInventory &inv, const std::vector<AlignedUtterance> &data,
                         const ReestimateOptions &opt) {
  require(!data.empty(), Status::kEmptyInput, "nothing to re-estimate from");
  require(opt.transition_floor > 0.0 && opt.transition_floor < 0.5, Status::kInvalidConfig,
          "transition_floor must lie in (0, 0.5)");
  require(static_cast<int64_t>(inv.variance_floor.size()) == inv.feature_dim,
          Status::kInvalidConfig, "inventory lacks a variance floor");

  std::vector<int64_t> state_base(inv.units.size());
  int64_t n_states = 0;
  for (size_t u = 0; u < inv.units.size(); ++u) {
    state_base[u] = n_states;
    n_states += inv.units[u].num_states();
  }

  // Per-utterance partial accumulators, merged in utterance order so the
  // result does not depend on the worker count.
  std::vector<std::vector<StateAcc>> partial(data.size());
  parallel_for(static_cast<int64_t>(data.size()), opt.threads, [&](int64_t i) {
    const AlignedUtterance &au = data[static_cast<size_t>(i)];
    require(au.features && au.alignment, Status::kInvalidArgument, "null utterance entry");
    require(au.features->cols == inv.feature_dim, Status::kDimensionMismatch,
            "features have dim ", au.features->cols, ", inventory expects ", inv.feature_dim);
    std::vector<int64_t> unit_idx = check_alignment(inv, *au.features, *au.alignment);

    auto &acc = partial[static_cast<size_t>(i)];
    acc.resize(static_cast<size_t>(n_states));
    for (size_t u = 0; u < inv.units.size(); ++u)
      for (int64_t k = 0; k < inv.units[u].num_states(); ++k)
        acc[static_cast<size_t>(state_base[u] + k)].init(
            inv.units[u].states[static_cast<size_t>(k)].num_components(), inv.feature_dim);

    const auto &entries = au.alignment->entries;
    for (size_t e = 0; e < entries.size(); ++e) {
      const HmmUnit &unit = inv.units[static_cast<size_t>(unit_idx[e])];
      StateAcc &sa = acc[static_cast<size_t>(state_base[static_cast<size_t>(unit_idx[e])] + entries[e].state)];
      const GaussianMixture &g = unit.states[static_cast<size_t>(entries[e].state)];
      for (int64_t t = entries[e].start_frame; t < entries[e].end_frame; ++t)
        accumulate_frame(g, au.features->row(t), sa);
      sa.trans_self += static_cast<double>(entries[e].end_frame - entries[e].start_frame - 1);
      if (e + 1 < entries.size()) sa.trans_adv += 1.0;
    }
  });

  std::vector<StateAcc> total(static_cast<size_t>(n_states));
  for (size_t u = 0; u < inv.units.size(); ++u)
    for (int64_t k = 0; k < inv.units[u].num_states(); ++k)
      total[static_cast<size_t>(state_base[u] + k)].init(
          inv.units[u].states[static_cast<size_t>(k)].num_components(), inv.feature_dim);
  for (const auto &p : partial)
    for (size_t s = 0; s < p.size(); ++s) total[s].merge(p[s]);

  UnitInventory out = inv;
  out.meta.notes.clear();
  const int64_t dim = inv.feature_dim;
  for (size_t u = 0; u < out.units.size(); ++u) {
    HmmUnit &unit = out.units[u];
    for (int64_t k = 0; k < unit.num_states(); ++k) {
      StateAcc &sa = total[static_cast<size_t>(state_base[u] + k)];
      if (sa.frames == 0) {
        out.meta.notes.push_back("zero-occupancy state " + unit.label + ":" + std::to_string(k));
        continue;
      }
      GaussianMixture &g = unit.states[static_cast<size_t>(k)];
      double occ_total = 0.0;
      for (double o : sa.occ) occ_total += o;
      for (int64_t m = 0; m < g.num_components(); ++m) {
        double o = sa.occ[static_cast<size_t>(m)];
        g.weights[static_cast<size_t>(m)] = o / occ_total;
        if (o <= 0.0) continue;  // dead component keeps its parameters at weight 0
        for (int64_t d = 0; d < dim; ++d) {
          double mean = sa.sum[static_cast<size_t>(m * dim + d)] / o;
          double var = sa.sumsq[static_cast<size_t>(m * dim + d)] / o - mean * mean;
          g.means[static_cast<size_t>(m * dim + d)] = mean;
          g.variances[static_cast<size_t>(m * dim + d)] =
              std::max(var, inv.variance_floor[static_cast<size_t>(d)]);
        }
      }
      double trans_total = sa.trans_self + sa.trans_adv;
      if (trans_total > 0.0) {
        double p = sa.trans_self / trans_total;
        p = std::min(std::max(p, opt.transition_floor), 1.0 - opt.transition_floor);
        unit.self_loop[static_cast<size_t>(k)] = p;
      }
      if (opt.mixup) {
        int64_t cap = std::max<int64_t>(1, sa.frames / std::max<int64_t>(1, opt.min_frames_per_component));
        int64_t target = std::min({2 * g.num_components(), opt.max_components, cap});
        if (target > g.num_components()) mix_up(g, target);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON round-trip
// ---------------------------------------------------------------------------

std::string inventory_to_json(const UnitInventory &inv) {
  nlohmann::ordered_json j;
  j["format"] = "audkit-inventory";
  j["version"] = 1;
  j["feature_dim"] = inv.feature_dim;
  j["variance_floor"] = inv.variance_floor;
  j["meta"] = {{"stage", inv.meta.stage},
               {"iterations", inv.meta.iterations},
               {"log_likelihood", inv.meta.log_likelihood},
               {"notes", inv.meta.notes}};
  // ordered_json is vector-backed: never hold a reference into an object
  // across a sibling insertion.  Build arrays locally, assign once.
  nlohmann::ordered_json units = nlohmann::ordered_json::array();
  for (const HmmUnit &u : inv.units) {
    nlohmann::ordered_json ju;
    ju["label"] = u.label;
    ju["kind"] = unit_kind_name(u.kind);
    nlohmann::ordered_json trans = nlohmann::ordered_json::array();
    for (double p : u.self_loop) trans.push_back({p, 1.0 - p});
    ju["transitions"] = std::move(trans);
    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    for (const GaussianMixture &g : u.states) {
      nlohmann::ordered_json js;
      js["weights"] = g.weights;
      nlohmann::ordered_json means = nlohmann::ordered_json::array();
      nlohmann::ordered_json vars = nlohmann::ordered_json::array();
      for (int64_t m = 0; m < g.num_components(); ++m) {
        means.push_back(std::vector<double>(g.mean(m), g.mean(m) + g.dim));
        vars.push_back(std::vector<double>(g.variance(m), g.variance(m) + g.dim));
      }
      js["means"] = std::move(means);
      js["variances"] = std::move(vars);
      states.push_back(std::move(js));
    }
    ju["states"] = std::move(states);
    units.push_back(std::move(ju));
  }
  j["units"] = std::move(units);
  return j.dump(2) + "\n";
}

UnitInventory inventory_from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad inventory JSON: ", e.what());
  }
  try {
    require(j.at("format") == "audkit-inventory", Status::kUnsupportedFormat,
            "not an inventory document");
    require(j.at("version") == 1, Status::kUnsupportedFormat, "unsupported inventory version");
    UnitInventory inv;
    inv.feature_dim = j.at("feature_dim").get<int64_t>();
    inv.variance_floor = j.at("variance_floor").get<std::vector<double>>();
    const auto &meta = j.at("meta");
    inv.meta.stage = meta.at("stage").get<std::string>();
    inv.meta.iterations = meta.at("iterations").get<int64_t>();
    inv.meta.log_likelihood = meta.at("log_likelihood").get<std::vector<double>>();
    inv.meta.notes = meta.at("notes").get<std::vector<std::string>>();
    for (const auto &ju : j.at("units")) {
      HmmUnit u;
      u.label = ju.at("label").get<std::string>();
      u.kind = unit_kind_from_name(ju.at("kind").get<std::string>());
      for (const auto &row : ju.at("transitions")) {
        double self = row.at(0).get<double>();
        double adv = row.at(1).get<double>();
        require(std::abs(self + adv - 1.0) <= 1e-9 && self > 0.0 && adv > 0.0,
                Status::kCorruptFile, "transition row of \"", u.label, "\" is not a distribution");
        u.self_loop.push_back(self);
      }
      for (const auto &js : ju.at("states")) {
        GaussianMixture g;
        g.dim = inv.feature_dim;
        g.weights = js.at("weights").get<std::vector<double>>();
        for (const auto &row : js.at("means")) {
          auto v = row.get<std::vector<double>>();
          require(static_cast<int64_t>(v.size()) == g.dim, Status::kCorruptFile,
                  "mean of wrong dimension in \"", u.label, "\"");
          g.means.insert(g.means.end(), v.begin(), v.end());
        }
        for (const auto &row : js.at("variances")) {
          auto v = row.get<std::vector<double>>();
          require(static_cast<int64_t>(v.size()) == g.dim, Status::kCorruptFile,
                  "variance of wrong dimension in \"", u.label, "\"");
          g.variances.insert(g.variances.end(), v.begin(), v.end());
        }
        require(g.means.size() == g.weights.size() * static_cast<size_t>(g.dim) &&
                    g.variances.size() == g.means.size(),
                Status::kCorruptFile, "component counts disagree in \"", u.label, "\"");
        u.states.push_back(std::move(g));
      }
      require(u.self_loop.size() == u.states.size(), Status::kCorruptFile,
              "state/transition counts disagree in \"", u.label, "\"");
      require(inv.index_of(u.label) < 0, Status::kCorruptFile, "duplicate unit label \"", u.label,
              "\"");
      inv.units.push_back(std::move(u));
    }
    return inv;
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad inventory JSON: ", e.what());
  }
}

void save_inventory(const UnitInventory &inv, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::kIoError, "cannot write ", path);
  out << inventory_to_json(inv);
  require(out.good(), Status::kIoError, "short write to ", path);
}

UnitInventory load_inventory(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::kNotFound, "cannot open ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return inventory_from_json(buf.str());
}

}  // namespace audkit
