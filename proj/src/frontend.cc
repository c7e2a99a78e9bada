// src/frontend.cc
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

#include "frontend.h"

#include <algorithm>
#include <cmath>
#include <complex>

namespace audkit {

namespace {

constexpr double kMelLogFloor = 1e-10;   // floor on mel filter outputs before log
constexpr double kEnergyEps = 1e-12;     // additive guard inside 10*log10

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>> &a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double angle = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Triangular filters on the HTK mel scale, continuous weights per FFT bin.
std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(static_cast<size_t>(n_mels) + 2);
  for (int j = 0; j < n_mels + 2; ++j)
    centers[static_cast<size_t>(j)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * j / (n_mels + 1));

  std::vector<std::vector<double>> bank(static_cast<size_t>(n_mels),
                                        std::vector<double>(static_cast<size_t>(n_bins), 0.0));
  for (int m = 0; m < n_mels; ++m) {
    double lo = centers[static_cast<size_t>(m)];
    double mid = centers[static_cast<size_t>(m) + 1];
    double hi = centers[static_cast<size_t>(m) + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f >= lo && f <= mid && mid > lo)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi && hi > mid)
        w = (hi - f) / (hi - mid);
      bank[static_cast<size_t>(m)][static_cast<size_t>(k)] = w;
    }
  }
  return bank;
}

void add_deltas(FeatureMatrix &feats, int n_static) {
  // Regression window of 2, edges clamped.
  const int window = 2;
  const double denom = 2.0 * (1.0 * 1.0 + 2.0 * 2.0);
  const int64_t t_max = feats.rows;
  std::vector<double> statics(feats.data);  // copy of the static half (first n_static cols)
  for (int64_t t = 0; t < t_max; ++t) {
    for (int c = 0; c < n_static; ++c) {
      double num = 0.0;
      for (int n = 1; n <= window; ++n) {
        int64_t tp = std::min<int64_t>(t + n, t_max - 1);
        int64_t tm = std::max<int64_t>(t - n, 0);
        num += n * (statics[static_cast<size_t>(tp * feats.cols + c)] -
                    statics[static_cast<size_t>(tm * feats.cols + c)]);
      }
      feats.at(t, n_static + c) = num / denom;
    }
  }
}

}  // namespace

void apply_cmvn(FeatureMatrix &feats, bool normalize_variance) {
  if (feats.rows == 0) return;
  const int64_t t_max = feats.rows;
  for (int64_t c = 0; c < feats.cols; ++c) {
    double mean = 0.0;
    for (int64_t t = 0; t < t_max; ++t) mean += feats.at(t, c);
    mean /= static_cast<double>(t_max);
    for (int64_t t = 0; t < t_max; ++t) feats.at(t, c) -= mean;
    if (normalize_variance) {
      double var = 0.0;
      for (int64_t t = 0; t < t_max; ++t) var += feats.at(t, c) * feats.at(t, c);
      var /= static_cast<double>(t_max);
      if (var > 1e-12) {
        double inv_std = 1.0 / std::sqrt(var);
        for (int64_t t = 0; t < t_max; ++t) feats.at(t, c) *= inv_std;
      }
    }
  }
}

void FeatureStats::accumulate(const FeatureMatrix &raw) {
  if (raw.empty()) return;
  if (sum.empty()) {
    sum.assign(static_cast<size_t>(raw.cols), 0.0);
    sum_sq.assign(static_cast<size_t>(raw.cols), 0.0);
  }
  require(static_cast<int64_t>(sum.size()) == raw.cols, Status::kDimensionMismatch,
          "feature stats hold ", sum.size(), " dims, input has ", raw.cols);
  for (int64_t t = 0; t < raw.rows; ++t)
    for (int64_t c = 0; c < raw.cols; ++c) {
      sum[static_cast<size_t>(c)] += raw.at(t, c);
      sum_sq[static_cast<size_t>(c)] += raw.at(t, c) * raw.at(t, c);
    }
  frames += raw.rows;
}

void FeatureStats::apply(FeatureMatrix &feats, bool normalize_variance) const {
  require(frames > 0, Status::kEmptyInput, "feature stats are empty");
  require(static_cast<int64_t>(sum.size()) == feats.cols, Status::kDimensionMismatch,
          "feature stats hold ", sum.size(), " dims, input has ", feats.cols);
  for (int64_t c = 0; c < feats.cols; ++c) {
    const double mean = sum[static_cast<size_t>(c)] / static_cast<double>(frames);
    for (int64_t t = 0; t < feats.rows; ++t) feats.at(t, c) -= mean;
    if (normalize_variance) {
      const double var =
          sum_sq[static_cast<size_t>(c)] / static_cast<double>(frames) - mean * mean;
      if (var > 1e-12) {
        const double inv_std = 1.0 / std::sqrt(var);
        for (int64_t t = 0; t < feats.rows; ++t) feats.at(t, c) *= inv_std;
      }
    }
  }
}

void FrontendConfig::validate() const {
  require(frame_shift > 0.0 && frame_shift <= frame_len, Status::kInvalidConfig,
          "need 0 < frame_shift <= frame_len, got shift=", frame_shift, " len=", frame_len);
  require(n_mels > 0 && n_cepstra > 0 && n_cepstra <= n_mels, Status::kInvalidConfig,
          "need 0 < n_cepstra <= n_mels, got n_cepstra=", n_cepstra, " n_mels=", n_mels);
  require(preemphasis >= 0.0 && preemphasis < 1.0, Status::kInvalidConfig,
          "preemphasis must be in [0, 1), got ", preemphasis);
  require(energy_smooth_win >= 0.0, Status::kInvalidConfig, "energy_smooth_win must be >= 0");
}

int FrontendConfig::frame_len_samples(int sample_rate) const {
  return static_cast<int>(std::lround(frame_len * sample_rate));
}

int FrontendConfig::frame_shift_samples(int sample_rate) const {
  return static_cast<int>(std::lround(frame_shift * sample_rate));
}

int64_t frame_count(int64_t num_samples, int frame_len_samples, int frame_shift_samples) {
  if (num_samples < frame_len_samples) return 0;
  return (num_samples - frame_len_samples) / frame_shift_samples + 1;
}

FeatureMatrix compute_mfcc(const Waveform &w, const FrontendConfig &cfg) {
  cfg.validate();
  require(w.sample_rate > 0, Status::kInvalidArgument, "waveform has no sample rate");
  const int frame_len = cfg.frame_len_samples(w.sample_rate);
  const int shift = cfg.frame_shift_samples(w.sample_rate);
  require(frame_len > 0 && shift > 0, Status::kInvalidConfig, "frame geometry rounds to zero samples");
  const int64_t n = static_cast<int64_t>(w.samples.size());
  const int64_t t_max = frame_count(n, frame_len, shift);
  require(t_max >= 1, Status::kTooShort, "waveform has ", n, " samples, one frame needs ", frame_len);

  // Pre-emphasis over the whole utterance.
  std::vector<double> x(static_cast<size_t>(n));
  x[0] = static_cast<double>(w.samples[0]) * (1.0 - cfg.preemphasis);
  for (int64_t i = 1; i < n; ++i)
    x[static_cast<size_t>(i)] =
        static_cast<double>(w.samples[static_cast<size_t>(i)]) -
        cfg.preemphasis * static_cast<double>(w.samples[static_cast<size_t>(i - 1)]);

  const int n_fft = next_pow2(frame_len);
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> window(static_cast<size_t>(frame_len));
  for (int i = 0; i < frame_len; ++i)
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / frame_len);

  const auto bank = mel_filterbank(cfg.n_mels, n_fft, w.sample_rate);

  // Orthonormal DCT-II basis, n_cepstra x n_mels.
  std::vector<double> dct(static_cast<size_t>(cfg.n_cepstra) * cfg.n_mels);
  for (int k = 0; k < cfg.n_cepstra; ++k) {
    double norm = std::sqrt((k == 0 ? 1.0 : 2.0) / cfg.n_mels);
    for (int m = 0; m < cfg.n_mels; ++m)
      dct[static_cast<size_t>(k * cfg.n_mels + m)] =
          norm * std::cos(M_PI * k * (2.0 * m + 1.0) / (2.0 * cfg.n_mels));
  }

  FeatureMatrix feats(t_max, cfg.feature_dim());
  feats.frame_shift = cfg.frame_shift;
  feats.frame_len = cfg.frame_len;

  std::vector<std::complex<double>> spec(static_cast<size_t>(n_fft));
  std::vector<double> power(static_cast<size_t>(n_bins));
  std::vector<double> log_mel(static_cast<size_t>(cfg.n_mels));
  for (int64_t t = 0; t < t_max; ++t) {
    const double *frame = x.data() + t * shift;
    for (int i = 0; i < frame_len; ++i)
      spec[static_cast<size_t>(i)] = frame[i] * window[static_cast<size_t>(i)];
    std::fill(spec.begin() + frame_len, spec.end(), std::complex<double>(0.0, 0.0));
    fft(spec);
    for (int k = 0; k < n_bins; ++k) power[static_cast<size_t>(k)] = std::norm(spec[static_cast<size_t>(k)]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      const auto &filt = bank[static_cast<size_t>(m)];
      double e = 0.0;
      for (int k = 0; k < n_bins; ++k) e += filt[static_cast<size_t>(k)] * power[static_cast<size_t>(k)];
      log_mel[static_cast<size_t>(m)] = std::log(std::max(e, kMelLogFloor));
    }
    double *out = feats.row(t);
    for (int k = 0; k < cfg.n_cepstra; ++k) {
      double c = 0.0;
      const double *basis = dct.data() + static_cast<size_t>(k) * cfg.n_mels;
      for (int m = 0; m < cfg.n_mels; ++m) c += basis[m] * log_mel[static_cast<size_t>(m)];
      out[k] = c;
    }
  }

  if (cfg.use_deltas) add_deltas(feats, cfg.n_cepstra);
  if (cfg.cmvn) apply_cmvn(feats, cfg.cmvn_var);
  return feats;
}

EnergyContour compute_energy_contour(const Waveform &w, const FrontendConfig &cfg) {
  cfg.validate();
  require(w.sample_rate > 0, Status::kInvalidArgument, "waveform has no sample rate");
  const int frame_len = cfg.frame_len_samples(w.sample_rate);
  const int shift = cfg.frame_shift_samples(w.sample_rate);
  const int64_t n = static_cast<int64_t>(w.samples.size());
  const int64_t t_max = frame_count(n, frame_len, shift);
  require(t_max >= 1, Status::kTooShort, "waveform has ", n, " samples, one frame needs ", frame_len);

  std::vector<double> raw(static_cast<size_t>(t_max));
  for (int64_t t = 0; t < t_max; ++t) {
    const float *frame = w.samples.data() + t * shift;
    double e = 0.0;
    for (int i = 0; i < frame_len; ++i) e += static_cast<double>(frame[i]) * frame[i];
    e /= frame_len;
    double db = 10.0 * std::log10(e + kEnergyEps);
    raw[static_cast<size_t>(t)] = std::max(db, cfg.energy_floor_db);
  }

  // Centered moving average; the window shrinks near the edges.
  int win = static_cast<int>(std::lround(cfg.energy_smooth_win / cfg.frame_shift));
  if (win < 1) win = 1;
  if (win % 2 == 0) ++win;
  const int half = win / 2;

  EnergyContour contour;
  contour.frame_shift = cfg.frame_shift;
  contour.floor_db = cfg.energy_floor_db;
  contour.values_db.resize(static_cast<size_t>(t_max));
  for (int64_t t = 0; t < t_max; ++t) {
    int64_t lo = std::max<int64_t>(0, t - half);
    int64_t hi = std::min<int64_t>(t_max - 1, t + half);
    double acc = 0.0;
    for (int64_t s = lo; s <= hi; ++s) acc += raw[static_cast<size_t>(s)];
    contour.values_db[static_cast<size_t>(t)] = acc / static_cast<double>(hi - lo + 1);
  }
  return contour;
}

}  // namespace audkit
