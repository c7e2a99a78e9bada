// src/manifest.cc
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

#include "manifest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "common.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace audkit {

namespace {

const std::set<std::string> kSplits = {"train_unit", "train_voice", "test"};

std::string trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

void validate(CorpusManifest &m, const fs::path &base) {
  std::set<std::string> seen;
  for (auto &e : m.entries) {
    require(!e.utterance_id.empty(), Status::kParseError, "manifest entry with empty id");
    require(seen.insert(e.utterance_id).second, Status::kParseError, "duplicate utterance id \"",
            e.utterance_id, "\"");
    require(kSplits.count(e.split) > 0, Status::kParseError, "unknown split \"", e.split,
            "\" for \"", e.utterance_id, "\" (expected train_unit, train_voice or test)");
    fs::path p(e.path);
    if (p.is_relative()) p = base / p;
    require(fs::exists(p), Status::kNotFound, "audio for \"", e.utterance_id,
            "\" not found at ", p.string());
    e.path = p.string();
  }
}

}  // namespace

std::vector<ManifestEntry> CorpusManifest::with_split(const std::string &split) const {
  std::vector<ManifestEntry> out;
  for (const auto &e : entries)
    if (e.split == split) out.push_back(e);
  return out;
}

CorpusManifest load_manifest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::kNotFound, "cannot open manifest ", path);
  const fs::path base = fs::path(path).parent_path();

  CorpusManifest m;
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  std::string line;
  if (ext == ".csv") {
    bool header = true;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto fields = split_csv_line(line);
      if (header) {
        header = false;
        require(fields.size() >= 2 && fields[0] == "utterance_id" && fields[1] == "path",
                Status::kParseError, "manifest CSV must start with utterance_id,path[,split]");
        continue;
      }
      require(fields.size() >= 2, Status::kParseError, "manifest row needs id and path: ", line);
      ManifestEntry e;
      e.utterance_id = fields[0];
      e.path = fields[1];
      if (fields.size() >= 3 && !fields[2].empty()) e.split = fields[2];
      m.entries.push_back(std::move(e));
    }
  } else if (ext == ".jsonl" || ext == ".json") {
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      try {
        nlohmann::json j = nlohmann::json::parse(line);
        ManifestEntry e;
        e.utterance_id = j.at("utterance_id").get<std::string>();
        e.path = j.at("path").get<std::string>();
        e.split = j.value("split", std::string("train_unit"));
        m.entries.push_back(std::move(e));
      } catch (const nlohmann::json::exception &ex) {
        throw_error(Status::kParseError, "bad manifest line: ", ex.what());
      }
    }
  } else {
    throw_error(Status::kUnsupportedFormat, "manifest must be .csv, .jsonl or .json, got ", path);
  }
  require(!m.entries.empty(), Status::kEmptyCorpus, "manifest ", path, " lists no utterances");
  validate(m, base);
  return m;
}

void save_manifest_csv(const CorpusManifest &m, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::kIoError, "cannot write ", path);
  out << "utterance_id,path,split\n";
  for (const auto &e : m.entries) out << e.utterance_id << "," << e.path << "," << e.split << "\n";
  require(out.good(), Status::kIoError, "short write to ", path);
}

}  // namespace audkit
