// src/textgrid.cc
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

#include "textgrid.h"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "common.h"

namespace audkit {

namespace {

std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    out.push_back(c);
    if (c == '"') out.push_back('"');  // Praat doubles embedded quotes
  }
  return out;
}

// Original intervals padded with empty ones so the tier tiles [0, xmax].
std::vector<TextGridInterval> fill_gaps(const std::vector<TextGridInterval> &in, double xmax) {
  std::vector<TextGridInterval> out;
  double cursor = 0.0;
  for (const auto &iv : in) {
    require(iv.xmin >= cursor && iv.xmax > iv.xmin && iv.xmax <= xmax + 1e-9,
            Status::kInvalidArgument, "intervals must be sorted, non-overlapping and inside [0, ",
            xmax, "]");
    if (iv.xmin > cursor) out.push_back({cursor, iv.xmin, ""});
    out.push_back(iv);
    cursor = iv.xmax;
  }
  if (cursor < xmax) out.push_back({cursor, xmax, ""});
  return out;
}

}  // namespace

std::string textgrid_to_string(const std::vector<TextGridTier> &tiers, double xmax) {
  require(xmax > 0.0, Status::kInvalidArgument, "xmax must be positive");
  std::ostringstream o;
  o << std::setprecision(17);
  o << "File type = \"ooTextFile\"\n"
    << "Object class = \"TextGrid\"\n\n"
    << "xmin = 0\n"
    << "xmax = " << xmax << "\n"
    << "tiers? <exists>\n"
    << "size = " << tiers.size() << "\n"
    << "item []:\n";
  for (size_t i = 0; i < tiers.size(); ++i) {
    auto filled = fill_gaps(tiers[i].intervals, xmax);
    o << "    item [" << i + 1 << "]:\n"
      << "        class = \"IntervalTier\"\n"
      << "        name = \"" << escape(tiers[i].name) << "\"\n"
      << "        xmin = 0\n"
      << "        xmax = " << xmax << "\n"
      << "        intervals: size = " << filled.size() << "\n";
    for (size_t k = 0; k < filled.size(); ++k) {
      o << "        intervals [" << k + 1 << "]:\n"
        << "            xmin = " << filled[k].xmin << "\n"
        << "            xmax = " << filled[k].xmax << "\n"
        << "            text = \"" << escape(filled[k].text) << "\"\n";
    }
  }
  return o.str();
}

void save_textgrid(const std::vector<TextGridTier> &tiers, double xmax, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::kIoError, "cannot write ", path);
  out << textgrid_to_string(tiers, xmax);
  require(out.good(), Status::kIoError, "short write to ", path);
}

}  // namespace audkit
