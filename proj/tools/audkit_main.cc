// tools/audkit_main.cc
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
//
// Command-line front end.  Everything goes through the shared library's C
// interface; errors print one `error: <Category>: <detail>` line on stderr
// and the process exits with the status value.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "audkit/audkit.h"

namespace {

int fail(audkit_status st) {
  std::cerr << "error: " << audkit_last_error() << "\n";
  return static_cast<int>(st);
}

int fail_usage(const std::string &detail) {
  std::cerr << "error: InvalidArgument: " << detail << "\n";
  return static_cast<int>(AUDKIT_INVALID_ARGUMENT);
}

const char *opt(const std::string &s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"acoustic unit discovery, transcription and resynthesis"};
  app.set_version_flag("--version", std::string(audkit_version()));
  app.require_subcommand(1);

  std::string model_dir, manifest, config_file, wav, transcription, output;
  std::string split = "test", triplets, reference, output_json, output_csv;
  std::vector<std::string> sets;
  int system = 1;
  int64_t target = 0;

  CLI::App *discover = app.add_subcommand(
      "discover", "segment, cluster and self-train an inventory on the train_unit split");
  discover->add_option("--model", model_dir, "model directory (created)")->required();
  discover->add_option("--manifest", manifest, "corpus manifest (.csv or .jsonl)")->required();
  discover->add_option("--config", config_file, "base configuration json");
  discover->add_option("--set", sets, "config override, section.key=value (repeatable)");

  CLI::App *train2 = app.add_subcommand(
      "train-stage2", "re-run unit-loop self-training from the stored stage-1 inventory");
  train2->add_option("--model", model_dir, "model directory")->required();
  train2->add_option("--manifest", manifest, "corpus manifest")->required();
  train2->add_option("--set", sets, "config override (repeatable)");

  CLI::App *merge = app.add_subcommand(
      "merge", "merge the inventory to a target size and re-train (system 2)");
  merge->add_option("--model", model_dir, "model directory")->required();
  merge->add_option("--manifest", manifest, "corpus manifest")->required();
  merge->add_option("--target", target, "merged unit count (default: config merge_target)");
  merge->add_option("--set", sets, "config override (repeatable)");

  CLI::App *encode = app.add_subcommand(
      "encode", "transcribe audio into unit tokens (json to stdout)");
  encode->add_option("--model", model_dir, "model directory")->required();
  encode->add_option("--wav", wav, "encode one wav file");
  encode->add_option("--manifest", manifest, "encode a manifest split to jsonl");
  encode->add_option("--split", split, "manifest split (default: test)");
  encode->add_option("--system", system, "1 = stage-2 inventory, 2 = merged")
      ->check(CLI::Range(1, 2));
  encode->add_option("--output", output, "output path (json / jsonl)");
  encode->add_option("--set", sets, "config override (repeatable)");

  CLI::App *resynth = app.add_subcommand(
      "resynth", "render audio for a transcription by exemplar concatenation");
  resynth->add_option("--model", model_dir, "model directory")->required();
  resynth->add_option("--transcription", transcription, "transcription json from encode");
  resynth->add_option("--wav", wav, "or: encode this wav first");
  resynth->add_option("--system", system, "1 = stage-2 inventory, 2 = merged")
      ->check(CLI::Range(1, 2));
  resynth->add_option("--output", output, "output wav path")->required();
  resynth->add_option("--set", sets, "config override (repeatable)");

  CLI::App *eval = app.add_subcommand(
      "eval", "bitrate, and optionally ABX / purity / NMI, over a manifest split");
  eval->add_option("--model", model_dir, "model directory")->required();
  eval->add_option("--manifest", manifest, "corpus manifest")->required();
  eval->add_option("--split", split, "manifest split (default: test)");
  eval->add_option("--system", system, "1 = stage-2 inventory, 2 = merged")
      ->check(CLI::Range(1, 2));
  eval->add_option("--triplets", triplets, "ABX triplet jsonl");
  eval->add_option("--reference", reference, "reference interval jsonl for purity/NMI");
  eval->add_option("--output-json", output_json, "metric report path (json)");
  eval->add_option("--output-csv", output_csv, "metric report path (csv)");
  eval->add_option("--set", sets, "config override (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    return fail_usage(e.what());
  }

  audkit_session *session = nullptr;
  audkit_status st = audkit_session_open(model_dir.c_str(), &session);
  if (st != AUDKIT_OK) return fail(st);

  auto done = [&](audkit_status code) {
    if (code != AUDKIT_OK) std::cerr << "error: " << audkit_last_error() << "\n";
    audkit_session_close(session);
    return static_cast<int>(code);
  };

  if (!config_file.empty()) {
    st = audkit_session_set_config_file(session, config_file.c_str());
    if (st != AUDKIT_OK) return done(st);
  }
  for (const std::string &kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      audkit_session_close(session);
      return fail_usage("--set expects section.key=value, got \"" + kv + "\"");
    }
    st = audkit_session_set_option(session, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != AUDKIT_OK) return done(st);
  }

  if (discover->parsed()) return done(audkit_discover(session, manifest.c_str()));
  if (train2->parsed()) return done(audkit_train_stage2(session, manifest.c_str()));
  if (merge->parsed()) return done(audkit_merge(session, manifest.c_str(), target));

  if (encode->parsed()) {
    if (wav.empty() == manifest.empty()) {
      audkit_session_close(session);
      return fail_usage("encode needs exactly one of --wav or --manifest");
    }
    char *json = nullptr;
    st = wav.empty() ? audkit_encode_manifest(session, manifest.c_str(), split.c_str(), system,
                                              opt(output), &json)
                     : audkit_encode_file(session, wav.c_str(), system, opt(output), &json);
    if (st == AUDKIT_OK && json != nullptr) std::cout << json;
    audkit_string_free(json);
    return done(st);
  }

  if (resynth->parsed()) {
    if (transcription.empty() == wav.empty()) {
      audkit_session_close(session);
      return fail_usage("resynth needs exactly one of --transcription or --wav");
    }
    return done(audkit_resynth(session, opt(transcription), opt(wav), system, output.c_str()));
  }

  if (eval->parsed()) {
    char *json = nullptr;
    st = audkit_eval(session, manifest.c_str(), split.c_str(), system, opt(triplets),
                     opt(reference), opt(output_json), opt(output_csv), &json);
    if (st == AUDKIT_OK && json != nullptr) std::cout << json;
    audkit_string_free(json);
    return done(st);
  }

  audkit_session_close(session);
  return fail_usage("no subcommand given");
}
