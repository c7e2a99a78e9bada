/* include/audkit/audkit.h
 *
 * Copyright 2026  The audkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
 * WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
 * MERCHANTABLITY OR NON-INFRINGEMENT.
 * See the Apache 2 License for the specific language governing permissions and
 * limitations under the License.
 *
 * C interface to the acoustic unit discovery toolkit.  Every entry point
 * returns an audkit_status; on failure audkit_last_error() (thread-local)
 * carries a one-line human-readable detail.  Strings returned through
 * `char **` out-parameters are owned by the caller and released with
 * audkit_string_free().
 */

#ifndef AUDKIT_AUDKIT_H_
#define AUDKIT_AUDKIT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AUDKIT_API __declspec(dllexport)
#else
#define AUDKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum audkit_status {
  AUDKIT_OK = 0,
  AUDKIT_NOT_FOUND = 1,
  AUDKIT_UNSUPPORTED_FORMAT = 2,
  AUDKIT_CORRUPT_FILE = 3,
  AUDKIT_TOO_SHORT = 4,
  AUDKIT_OUT_OF_RANGE = 5,
  AUDKIT_EMPTY_SEQUENCE = 6,
  AUDKIT_DIMENSION_MISMATCH = 7,
  AUDKIT_UNKNOWN_CLUSTER = 8,
  AUDKIT_SEGMENT_TOO_SHORT = 9,
  AUDKIT_INFEASIBLE_ALIGNMENT = 10,
  AUDKIT_UNKNOWN_LABEL = 11,
  AUDKIT_EMPTY_INPUT = 12,
  AUDKIT_INCONSISTENT_ALIGNMENT = 13,
  AUDKIT_NO_USABLE_CLUSTERS = 14,
  AUDKIT_EMPTY_CORPUS = 15,
  AUDKIT_TARGET_EXCEEDS_KINDS = 16,
  AUDKIT_MISSING_OCCURRENCE = 17,
  AUDKIT_UNKNOWN_UNIT = 18,
  AUDKIT_LENGTH_MISMATCH = 19,
  AUDKIT_EMPTY_TRANSCRIPTIONS = 20,
  AUDKIT_INVALID_ARGUMENT = 21,
  AUDKIT_INVALID_CONFIG = 22,
  AUDKIT_IO_ERROR = 23,
  AUDKIT_PARSE_ERROR = 24,
  AUDKIT_INTERNAL = 25
} audkit_status;

AUDKIT_API const char *audkit_version(void);
AUDKIT_API const char *audkit_status_name(audkit_status s);

/* Detail of the most recent failure on this thread ("" after a success). */
AUDKIT_API const char *audkit_last_error(void);

AUDKIT_API void audkit_string_free(char *s);

/* ------------------------------------------------------------------------
 * Session: a model directory plus configuration overrides.  Commands read
 * and write the directory's artifacts (config, inventories, exemplars,
 * metrics, run metadata).
 * ------------------------------------------------------------------------ */

typedef struct audkit_session audkit_session;

AUDKIT_API audkit_status audkit_session_open(const char *model_dir, audkit_session **out);
AUDKIT_API void audkit_session_close(audkit_session *s);

/* Base configuration file for audkit_discover (later commands reuse the
 * config stored in the model directory). */
AUDKIT_API audkit_status audkit_session_set_config_file(audkit_session *s, const char *path);

/* One `section.key=value` override, applied after the base config. */
AUDKIT_API audkit_status audkit_session_set_option(audkit_session *s, const char *dotted_key,
                                                   const char *value);

/* Full discovery on the manifest's train_unit split: frontend, syllable
 * segmentation, DTW graph clustering, both self-training stages, exemplars. */
AUDKIT_API audkit_status audkit_discover(audkit_session *s, const char *manifest_path);

/* Re-runs the second self-training stage from the stored stage-1 inventory. */
AUDKIT_API audkit_status audkit_train_stage2(audkit_session *s, const char *manifest_path);

/* Merges the stage-2 inventory down to `target` units (0 keeps the config's
 * merge_target) and re-trains both stages with the mapped labels. */
AUDKIT_API audkit_status audkit_merge(audkit_session *s, const char *manifest_path,
                                      int64_t target);

/* Encodes one wav file; `system` is 1 (stage-2 inventory) or 2 (merged).
 * Writes `output_path` when non-NULL; returns the transcription JSON through
 * `json_out` when non-NULL. */
AUDKIT_API audkit_status audkit_encode_file(audkit_session *s, const char *wav_path, int system,
                                            const char *output_path, char **json_out);

/* Encodes a manifest split to JSONL (NULL output_path picks a default inside
 * the model directory); `json_out` receives an aggregate bitrate summary. */
AUDKIT_API audkit_status audkit_encode_manifest(audkit_session *s, const char *manifest_path,
                                                const char *split, int system,
                                                const char *output_path, char **json_out);

/* Renders audio for a transcription JSON file, or for `wav_path` after
 * encoding it; exactly one of the two sources must be non-NULL. */
AUDKIT_API audkit_status audkit_resynth(audkit_session *s, const char *transcription_path,
                                        const char *wav_path, int system,
                                        const char *output_wav);

/* Bitrate (always), plus frame purity/NMI against `reference_path` and ABX
 * error over `triplets_path` when given (either may be NULL).  Reports land
 * in the model directory unless output paths are given; `json_out` receives
 * the report. */
AUDKIT_API audkit_status audkit_eval(audkit_session *s, const char *manifest_path,
                                     const char *split, int system, const char *triplets_path,
                                     const char *reference_path, const char *output_json,
                                     const char *output_csv, char **json_out);

/* ------------------------------------------------------------------------
 * Data-level helpers
 * ------------------------------------------------------------------------ */

typedef struct audkit_waveform audkit_waveform;
typedef struct audkit_features audkit_features;

AUDKIT_API audkit_status audkit_wav_read(const char *path, audkit_waveform **out);
AUDKIT_API void audkit_waveform_free(audkit_waveform *w);
AUDKIT_API audkit_status audkit_waveform_info(const audkit_waveform *w, int64_t *num_samples,
                                              int32_t *sample_rate);

/* MFCC+deltas under the session's frontend configuration (NULL session uses
 * the defaults). */
AUDKIT_API audkit_status audkit_mfcc(const audkit_session *s, const audkit_waveform *w,
                                     audkit_features **out);
AUDKIT_API void audkit_features_free(audkit_features *f);
AUDKIT_API audkit_status audkit_features_shape(const audkit_features *f, int64_t *rows,
                                               int64_t *cols);
AUDKIT_API audkit_status audkit_features_save(const audkit_features *f, const char *path);

/* Length-normalized DTW distance (band 0 = unbanded). */
AUDKIT_API audkit_status audkit_dtw_distance(const audkit_features *a, const audkit_features *b,
                                             int64_t band, double *out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AUDKIT_AUDKIT_H_ */
