// src/wave.h
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

#ifndef AUDKIT_WAVE_H_
#define AUDKIT_WAVE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "common.h"

namespace audkit {

/// Mono audio with samples normalized to [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Reads a RIFF/WAVE file. Accepts mono 16-bit integer or 32-bit float PCM
/// only; anything else is UnsupportedFormat. Structurally broken files
/// (missing or truncated chunks) are CorruptFile.
Waveform read_wav(const std::string &path);

/// Writes mono 16-bit PCM.
void write_wav(const Waveform &w, const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_WAVE_H_
