// src/capi.cc
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

#include "audkit/audkit.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "common.h"
#include "config.h"
#include "dtw.h"
#include "frontend.h"
#include "matrix.h"
#include "pipeline.h"
#include "wave.h"

struct audkit_session {
  std::string model_dir;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct audkit_waveform {
  audkit::Waveform w;
};

struct audkit_features {
  audkit::FeatureMatrix f;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
audkit_status wrap(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return AUDKIT_OK;
  } catch (const audkit::Error &e) {
    g_last_error = e.what();
    return static_cast<audkit_status>(e.status());
  } catch (const std::bad_alloc &) {
    g_last_error = "Internal: out of memory";
    return AUDKIT_INTERNAL;
  } catch (const std::exception &e) {
    g_last_error = std::string("Internal: ") + e.what();
    return AUDKIT_INTERNAL;
  }
}

audkit_status fail_null(const char *what) {
  g_last_error = std::string("InvalidArgument: null argument: ") + what;
  return AUDKIT_INVALID_ARGUMENT;
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string or_empty(const char *s) { return s == nullptr ? std::string() : std::string(s); }

}  // namespace

extern "C" {

const char *audkit_version(void) { return audkit::kVersion; }

const char *audkit_status_name(audkit_status s) {
  return audkit::status_name(static_cast<audkit::Status>(s));
}

const char *audkit_last_error(void) { return g_last_error.c_str(); }

void audkit_string_free(char *s) { std::free(s); }

audkit_status audkit_session_open(const char *model_dir, audkit_session **out) {
  if (model_dir == nullptr) return fail_null("model_dir");
  if (out == nullptr) return fail_null("out");
  return wrap([&] {
    auto *s = new audkit_session();
    s->model_dir = model_dir;
    *out = s;
  });
}

void audkit_session_close(audkit_session *s) { delete s; }

audkit_status audkit_session_set_config_file(audkit_session *s, const char *path) {
  if (s == nullptr) return fail_null("session");
  if (path == nullptr) return fail_null("path");
  return wrap([&] { s->config_path = path; });
}

audkit_status audkit_session_set_option(audkit_session *s, const char *dotted_key,
                                        const char *value) {
  if (s == nullptr) return fail_null("session");
  if (dotted_key == nullptr) return fail_null("dotted_key");
  if (value == nullptr) return fail_null("value");
  // Overrides are validated when a command applies them, so that values
  // that are only consistent in combination do not fail one at a time.
  return wrap([&] { s->overrides.emplace_back(dotted_key, value); });
}

audkit_status audkit_discover(audkit_session *s, const char *manifest_path) {
  if (s == nullptr) return fail_null("session");
  if (manifest_path == nullptr) return fail_null("manifest_path");
  return wrap([&] {
    audkit::RunOptions opt;
    opt.model_dir = s->model_dir;
    opt.manifest_path = manifest_path;
    opt.config_path = s->config_path;
    opt.overrides = s->overrides;
    audkit::run_discover(opt);
  });
}

audkit_status audkit_train_stage2(audkit_session *s, const char *manifest_path) {
  if (s == nullptr) return fail_null("session");
  if (manifest_path == nullptr) return fail_null("manifest_path");
  return wrap([&] {
    audkit::RunOptions opt;
    opt.model_dir = s->model_dir;
    opt.manifest_path = manifest_path;
    opt.overrides = s->overrides;
    audkit::run_train_stage2(opt);
  });
}

audkit_status audkit_merge(audkit_session *s, const char *manifest_path, int64_t target) {
  if (s == nullptr) return fail_null("session");
  if (manifest_path == nullptr) return fail_null("manifest_path");
  return wrap([&] {
    audkit::MergeRunOptions opt;
    opt.model_dir = s->model_dir;
    opt.manifest_path = manifest_path;
    opt.target = target > 0 ? target : -1;
    opt.overrides = s->overrides;
    audkit::run_merge(opt);
  });
}

audkit_status audkit_encode_file(audkit_session *s, const char *wav_path, int system,
                                 const char *output_path, char **json_out) {
  if (s == nullptr) return fail_null("session");
  if (wav_path == nullptr) return fail_null("wav_path");
  return wrap([&] {
    audkit::EncodeRunOptions opt;
    opt.model_dir = s->model_dir;
    opt.wav_path = wav_path;
    opt.system = system;
    opt.output_path = or_empty(output_path);
    opt.overrides = s->overrides;
    const std::string json = audkit::run_encode(opt);
    if (json_out != nullptr) *json_out = dup_string(json);
  });
}

audkit_status audkit_encode_manifest(audkit_session *s, const char *manifest_path,
                                     const char *split, int system, const char *output_path,
                                     char **json_out) {
  if (s == nullptr) return fail_null("session");
  if (manifest_path == nullptr) return fail_null("manifest_path");
  return wrap([&] {
    audkit::EncodeRunOptions opt;
    opt.model_dir = s->model_dir;
    opt.manifest_path = manifest_path;
    if (split != nullptr) opt.split = split;
    opt.system = system;
    opt.output_path = or_empty(output_path);
    opt.overrides = s->overrides;
    const std::string json = audkit::run_encode(opt);
    if (json_out != nullptr) *json_out = dup_string(json);
  });
}

audkit_status audkit_resynth(audkit_session *s, const char *transcription_path,
                             const char *wav_path, int system, const char *output_wav) {
  if (s == nullptr) return fail_null("session");
  if (output_wav == nullptr) return fail_null("output_wav");
  return wrap([&] {
    audkit::ResynthRunOptions opt;
    opt.model_dir = s->model_dir;
    opt.transcription_path = or_empty(transcription_path);
    opt.wav_path = or_empty(wav_path);
    opt.system = system;
    opt.output_wav = output_wav;
    opt.overrides = s->overrides;
    audkit::run_resynth(opt);
  });
}

audkit_status audkit_eval(audkit_session *s, const char *manifest_path, const char *split,
                          int system, const char *triplets_path, const char *reference_path,
                          const char *output_json, const char *output_csv, char **json_out) {
  if (s == nullptr) return fail_null("session");
  if (manifest_path == nullptr) return fail_null("manifest_path");
  return wrap([&] {
    audkit::EvalRunOptions opt;
    opt.model_dir = s->model_dir;
    opt.manifest_path = manifest_path;
    if (split != nullptr) opt.split = split;
    opt.system = system;
    opt.triplets_path = or_empty(triplets_path);
    opt.reference_path = or_empty(reference_path);
    opt.output_json = or_empty(output_json);
    opt.output_csv = or_empty(output_csv);
    opt.overrides = s->overrides;
    const std::string json = audkit::run_eval(opt);
    if (json_out != nullptr) *json_out = dup_string(json);
  });
}

audkit_status audkit_wav_read(const char *path, audkit_waveform **out) {
  if (path == nullptr) return fail_null("path");
  if (out == nullptr) return fail_null("out");
  return wrap([&] {
    auto *w = new audkit_waveform();
    try {
      w->w = audkit::read_wav(path);
    } catch (...) {
      delete w;
      throw;
    }
    *out = w;
  });
}

void audkit_waveform_free(audkit_waveform *w) { delete w; }

audkit_status audkit_waveform_info(const audkit_waveform *w, int64_t *num_samples,
                                   int32_t *sample_rate) {
  if (w == nullptr) return fail_null("waveform");
  return wrap([&] {
    if (num_samples != nullptr) *num_samples = static_cast<int64_t>(w->w.samples.size());
    if (sample_rate != nullptr) *sample_rate = w->w.sample_rate;
  });
}

audkit_status audkit_mfcc(const audkit_session *s, const audkit_waveform *w,
                          audkit_features **out) {
  if (w == nullptr) return fail_null("waveform");
  if (out == nullptr) return fail_null("out");
  return wrap([&] {
    audkit::PipelineConfig cfg;
    if (s != nullptr) cfg = audkit::apply_overrides(cfg, s->overrides);
    auto *f = new audkit_features();
    try {
      f->f = audkit::compute_mfcc(w->w, cfg.frontend);
    } catch (...) {
      delete f;
      throw;
    }
    *out = f;
  });
}

void audkit_features_free(audkit_features *f) { delete f; }

audkit_status audkit_features_shape(const audkit_features *f, int64_t *rows, int64_t *cols) {
  if (f == nullptr) return fail_null("features");
  return wrap([&] {
    if (rows != nullptr) *rows = f->f.rows;
    if (cols != nullptr) *cols = f->f.cols;
  });
}

audkit_status audkit_features_save(const audkit_features *f, const char *path) {
  if (f == nullptr) return fail_null("features");
  if (path == nullptr) return fail_null("path");
  return wrap([&] { audkit::save_matrix(f->f, path); });
}

audkit_status audkit_dtw_distance(const audkit_features *a, const audkit_features *b,
                                  int64_t band, double *out) {
  if (a == nullptr || b == nullptr) return fail_null("features");
  if (out == nullptr) return fail_null("out");
  return wrap([&] { *out = audkit::dtw_distance(a->f, b->f, band); });
}

}  // extern "C"
