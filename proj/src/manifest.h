// src/manifest.h
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

#ifndef AUDKIT_MANIFEST_H_
#define AUDKIT_MANIFEST_H_

#include <string>
#include <vector>

namespace audkit {

/// One corpus utterance.  `split` is one of train_unit, train_voice, test.
struct ManifestEntry {
  std::string utterance_id;
  std::string path;  // resolved against the manifest's directory when relative
  std::string split = "train_unit";
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> with_split(const std::string &split) const;
};

/// Reads `.csv` (header utterance_id,path[,split]) or `.jsonl`/`.json` lines
/// ({"utterance_id","path","split"}).  Ids must be unique, splits valid, and
/// every path must exist.
CorpusManifest load_manifest(const std::string &path);

void save_manifest_csv(const CorpusManifest &m, const std::string &path);

}  // namespace audkit

#endif  // AUDKIT_MANIFEST_H_
