// src/textgrid.h
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

#ifndef AUDKIT_TEXTGRID_H_
#define AUDKIT_TEXTGRID_H_

#include <string>
#include <vector>

namespace audkit {

struct TextGridInterval {
  double xmin = 0.0;
  double xmax = 0.0;
  std::string text;
};

struct TextGridTier {
  std::string name;
  std::vector<TextGridInterval> intervals;  // sorted, non-overlapping
};

/// Praat long-form "ooTextFile" TextGrid covering [0, xmax].  Gaps between
/// the given intervals are filled with empty-text intervals so Praat accepts
/// the tier.
std::string textgrid_to_string(const std::vector<TextGridTier> &tiers, double xmax);

void save_textgrid(const std::vector<TextGridTier> &tiers, double xmax, const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_TEXTGRID_H_
