// src/transcription.cc
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

#include "transcription.h"

#include <fstream>

#include "common.h"
#include "json.hpp"

namespace audkit {

std::vector<std::string> Transcription::labels() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(t.label);
  return out;
}

double Transcription::duration_s() const {
  return tokens.empty() ? 0.0 : static_cast<double>(tokens.back().end_frame) * frame_shift;
}

std::string transcription_to_json(const Transcription &t, int indent) {
  nlohmann::ordered_json j;
  j["utterance_id"] = t.utterance_id;
  j["frame_shift"] = t.frame_shift;
  j["log_likelihood"] = t.total_log_likelihood;
  auto &tokens = j["tokens"] = nlohmann::ordered_json::array();
  for (const auto &tok : t.tokens) {
    tokens.push_back({{"label", tok.label},
                      {"start_frame", tok.start_frame},
                      {"end_frame", tok.end_frame},
                      {"start_s", static_cast<double>(tok.start_frame) * t.frame_shift},
                      {"end_s", static_cast<double>(tok.end_frame) * t.frame_shift}});
  }
  return j.dump(indent);
}

Transcription transcription_from_json(const std::string &text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    Transcription t;
    t.utterance_id = j.at("utterance_id").get<std::string>();
    t.frame_shift = j.at("frame_shift").get<double>();
    t.total_log_likelihood = j.value("log_likelihood", 0.0);
    for (const auto &tok : j.at("tokens")) {
      TranscriptionToken tt;
      tt.label = tok.at("label").get<std::string>();
      tt.start_frame = tok.at("start_frame").get<int64_t>();
      tt.end_frame = tok.at("end_frame").get<int64_t>();
      require(tt.end_frame > tt.start_frame, Status::kParseError, "token span [", tt.start_frame,
              ", ", tt.end_frame, ") is empty");
      t.tokens.push_back(std::move(tt));
    }
    return t;
  } catch (const nlohmann::json::exception &e) {
    throw_error(Status::kParseError, "bad transcription JSON: ", e.what());
  }
}

void save_transcriptions_jsonl(const std::vector<Transcription> &ts, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::kIoError, "cannot write ", path);
  for (const auto &t : ts) out << transcription_to_json(t) << "\n";
  require(out.good(), Status::kIoError, "short write to ", path);
}

std::vector<Transcription> load_transcriptions_jsonl(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::kNotFound, "cannot open ", path);
  std::vector<Transcription> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(transcription_from_json(line));
  }
  return out;
}

}  // namespace audkit
