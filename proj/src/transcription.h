// src/transcription.h
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

#ifndef AUDKIT_TRANSCRIPTION_H_
#define AUDKIT_TRANSCRIPTION_H_

#include <cstdint>
#include <string>
#include <vector>

namespace audkit {

/// One decoded unit occurrence, frame indexed, end exclusive.
struct TranscriptionToken {
  std::string label;
  int64_t start_frame = 0;
  int64_t end_frame = 0;
};

/// Unit-level encoding of one utterance.  Tokens tile [0, T).
struct Transcription {
  std::string utterance_id;
  double frame_shift = 0.0;  // seconds, for span-to-time conversion
  std::vector<TranscriptionToken> tokens;
  double total_log_likelihood = 0.0;

  std::vector<std::string> labels() const;
  double duration_s() const;  // end of the last token, in seconds
};

/// One JSON object per transcription:
/// {"utterance_id","frame_shift","log_likelihood","tokens":[{"label","start_frame","end_frame","start_s","end_s"}]}
std::string transcription_to_json(const Transcription &t, int indent = -1);
Transcription transcription_from_json(const std::string &text);

void save_transcriptions_jsonl(const std::vector<Transcription> &ts, const std::string &path);
std::vector<Transcription> load_transcriptions_jsonl(const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_TRANSCRIPTION_H_
