// tests/frontend_test.cc
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

#include <cmath>

#include "common.h"
#include "frontend.h"
#include "testutil.h"

using namespace audkit;

namespace {

Waveform tone(double freq, double dur, double amp, int rate = 16000) {
  Waveform w;
  w.sample_rate = rate;
  int64_t n = static_cast<int64_t>(dur * rate);
  for (int64_t i = 0; i < n; ++i)
    w.samples.push_back(static_cast<float>(amp * std::sin(2.0 * M_PI * freq * i / rate)));
  return w;
}

}  // namespace

TEST_CASE("frame_count arithmetic") {
  CHECK(frame_count(400, 400, 160) == 1);
  CHECK(frame_count(399, 400, 160) == 0);
  CHECK(frame_count(400 + 160, 400, 160) == 2);
  CHECK(frame_count(400 + 159, 400, 160) == 1);
  CHECK(frame_count(16000, 400, 160) == (16000 - 400) / 160 + 1);
}

TEST_CASE("mfcc shape and frame geometry") {
  FrontendConfig cfg;
  Waveform w = tone(440.0, 0.5, 0.5);
  FeatureMatrix f = compute_mfcc(w, cfg);

  CHECK(f.cols == cfg.feature_dim());
  CHECK(f.cols == 26);
  CHECK(f.rows == frame_count(static_cast<int64_t>(w.samples.size()),
                              cfg.frame_len_samples(w.sample_rate),
                              cfg.frame_shift_samples(w.sample_rate)));
  CHECK(f.frame_shift == doctest::Approx(0.010));
  CHECK(f.frame_len == doctest::Approx(0.025));
  for (double v : f.data) CHECK(std::isfinite(v));
}

TEST_CASE("per-utterance cmvn zeroes the mean") {
  FrontendConfig cfg;
  cfg.use_deltas = false;
  Waveform w = tone(300.0, 0.4, 0.4);
  FeatureMatrix f = compute_mfcc(w, cfg);
  for (int64_t d = 0; d < f.cols; ++d) {
    double mean = 0.0;
    for (int64_t t = 0; t < f.rows; ++t) mean += f.at(t, d);
    mean /= static_cast<double>(f.rows);
    CHECK(std::abs(mean) < 1e-9);
  }
}

TEST_CASE("cmvn variance option normalizes per-dimension variance") {
  FrontendConfig cfg;
  cfg.use_deltas = false;
  cfg.cmvn_var = true;
  Waveform w = tone(500.0, 0.6, 0.4);
  // Add a second tone so features actually vary over time.
  Waveform w2 = tone(1500.0, 0.4, 0.3);
  w.samples.insert(w.samples.end(), w2.samples.begin(), w2.samples.end());
  FeatureMatrix f = compute_mfcc(w, cfg);
  for (int64_t d = 0; d < f.cols; ++d) {
    double var = 0.0;
    for (int64_t t = 0; t < f.rows; ++t) var += f.at(t, d) * f.at(t, d);
    var /= static_cast<double>(f.rows);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("deltas double the dimension and track differences") {
  FrontendConfig with, without;
  without.use_deltas = false;
  Waveform w = tone(700.0, 0.3, 0.4);
  FeatureMatrix a = compute_mfcc(w, with);
  FeatureMatrix b = compute_mfcc(w, without);
  CHECK(a.cols == 2 * b.cols);
  CHECK(a.rows == b.rows);
}

TEST_CASE("tones with different carriers separate in mfcc space") {
  FrontendConfig cfg;
  FeatureMatrix low = compute_mfcc(tone(300.0, 0.3, 0.4), cfg);
  FeatureMatrix low2 = compute_mfcc(tone(300.0, 0.3, 0.4), cfg);
  FeatureMatrix high = compute_mfcc(tone(2000.0, 0.3, 0.4), cfg);

  auto mid_dist = [&](const FeatureMatrix &x, const FeatureMatrix &y) {
    double acc = 0.0;
    int64_t tx = x.rows / 2, ty = y.rows / 2;
    for (int64_t d = 0; d < x.cols; ++d) {
      double diff = x.at(tx, d) - y.at(ty, d);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };
  CHECK(mid_dist(low, high) > 10.0 * mid_dist(low, low2));
}

TEST_CASE("energy contour flags speech against silence and respects the floor") {
  FrontendConfig cfg;
  Waveform w = tone(440.0, 0.25, 0.4);
  Waveform gap;
  gap.sample_rate = w.sample_rate;
  gap.samples.assign(w.sample_rate / 4, 0.0f);
  Waveform both;
  both.sample_rate = w.sample_rate;
  both.samples = gap.samples;
  both.samples.insert(both.samples.end(), w.samples.begin(), w.samples.end());
  both.samples.insert(both.samples.end(), gap.samples.begin(), gap.samples.end());

  EnergyContour e = compute_energy_contour(both, cfg);
  CHECK(e.frame_shift == doctest::Approx(0.010));
  CHECK(e.floor_db == doctest::Approx(cfg.energy_floor_db));
  REQUIRE(!e.values_db.empty());

  double lo = 1e30, hi = -1e30;
  for (double v : e.values_db) {
    CHECK(v >= cfg.energy_floor_db - 1e-9);  // floored
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == doctest::Approx(cfg.energy_floor_db));  // digital silence hits the floor
  CHECK(hi > cfg.energy_floor_db + 30.0);             // tone rides far above it
}

TEST_CASE("frontend config validation") {
  FrontendConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  FrontendConfig bad = cfg;
  bad.frame_shift = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = cfg;
  bad.n_cepstra = 60;  // more cepstra than mel bands
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = cfg;
  bad.preemphasis = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("mfcc of a too-short waveform reports TooShort") {
  FrontendConfig cfg;
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(100, 0.1f);  // shorter than one 25 ms frame
  try {
    compute_mfcc(w, cfg);
    FAIL("expected Error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::kTooShort);
  }
}
