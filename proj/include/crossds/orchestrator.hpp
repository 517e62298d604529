// Copyright 2026 The crossds Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossds/corpus.hpp"
#include "crossds/evaluator.hpp"
#include "crossds/inference.hpp"
#include "crossds/pairgen.hpp"
#include "crossds/promptkit.hpp"
#include "json.hpp"

namespace crossds {

// Fine-tuning settings handed to the adapter through control.json. Defaults
// are LoRA rank 32, alpha 32, dropout 0.05, cosine schedule, three inner
// epochs per outer cycle.
struct AdapterHyperparams {
  int inner_epochs = 3;
  int lora_rank = 32;
  int lora_alpha = 32;
  double lora_dropout = 0.05;
  std::string scheduler = "cosine";
  std::string base_model_id;
};

// Test-set size used when neither test_size nor test_fraction is given:
// 10 for v1_norm_acc, 30 otherwise.
std::size_t default_test_size(PromptVariant variant);

struct RunConfig {
  PromptVariant variant = PromptVariant::kCodeOnly;
  std::filesystem::path corpus_path;
  CorpusConfig corpus;
  SplitSpec split;
  BackendDescriptor backend;
  int outer_epochs = 1;
  std::optional<std::string> adapter_command;
  AdapterHyperparams hyper;
  std::filesystem::path output_dir;
  std::string run_id;  // derived from config and corpus digest when empty
  Attribution attribution = Attribution::kBoth;
  RenderOptions render;
  std::optional<std::filesystem::path> template_dir;
  bool abort_on_backend_failure = false;
  std::chrono::milliseconds descriptor_timeout{600000};

  void validate() const;
};

struct EpochEntry {
  std::int64_t epoch = 0;
  std::string status;  // "ok" or "failed"
  std::string report_path;
  std::size_t error_count = 0;
  std::optional<double> training_loss;
  std::string backend_id;
};

struct RunManifest {
  std::string run_id;
  std::string status;  // "running", "complete", "aborted"
  std::string abort_reason;
  std::string template_version;
  std::string corpus_digest;
  nlohmann::json config;
  std::vector<EpochEntry> epochs;
  std::string started_at;
  std::string finished_at;
};

nlohmann::json manifest_json(const RunManifest& m);
RunManifest parse_manifest(const nlohmann::json& j);
RunManifest read_manifest(const std::filesystem::path& run_dir);

struct RunResult {
  RunManifest manifest;
  std::filesystem::path run_dir;
  std::vector<EpochReport> reports;
  // False if any epoch failed or the run aborted.
  bool all_epochs_evaluated = false;
};

// Evaluates epoch 0 with config.backend, then for each outer epoch optionally
// runs the adapter and re-evaluates the same test set. Everything lands in
// output_dir/run_id. Adapter failures abort the run and are recorded in the
// manifest rather than thrown; configuration and corpus errors throw.
RunResult run(const RunConfig& config);

// SHA-256 over the three ingestion files (name, length and bytes of each).
std::string corpus_digest(const std::filesystem::path& corpus_dir);

struct BuildConfig {
  std::filesystem::path corpus_path;
  CorpusConfig corpus;
  std::vector<PromptVariant> variants{kAllVariants.begin(), kAllVariants.end()};
  // Applied to every variant; when neither size nor fraction is set the
  // per-variant default is used.
  SplitSpec split;
  RenderOptions render;
  std::optional<std::filesystem::path> template_dir;
  std::filesystem::path output_dir;
};

struct BuildCounts {
  std::size_t pairs = 0;
  std::map<PromptVariant, std::pair<std::size_t, std::size_t>> train_test;
};

// corpus -> pairs.jsonl -> train_<variant>.jsonl / test_<variant>.jsonl.
BuildCounts build(const BuildConfig& config);

// Scores a response log against a finished run's test set and writes
// epoch reports, curve.csv and per_dataset.csv to out_dir.
std::vector<EpochReport> rescore(const std::filesystem::path& run_dir,
                                 const std::filesystem::path& response_log,
                                 const std::filesystem::path& out_dir);

// Scores the log entries of one epoch. Entries without raw_text are errors.
EpochReport score_logged(const std::vector<LoggedResponse>& entries,
                         const std::vector<PairSample>& test_samples,
                         const Corpus& corpus, std::int64_t epoch,
                         Attribution attribution);

// Writes epoch_report_<n>.json for each report plus curve.csv and
// per_dataset.csv.
void write_reports(const std::filesystem::path& dir,
                   const std::vector<EpochReport>& reports, const Corpus& corpus);

struct Summary {
  std::optional<double> peak;
  std::vector<std::int64_t> peak_epochs;
  std::size_t run_length = 0;  // number of evaluated epochs
};

// Peak over epochs with a defined accuracy; every epoch attaining it is
// listed.
Summary summarize(const std::vector<EpochReport>& reports);

// "peak 80.0% @ epoch 15, run 16"; several peak epochs read
// "peak 70.0% @ epochs 8, 13, run 15".
std::string format_summary(const Summary& summary);

// Summary line plus the per-dataset table of run `run_id` under `root`.
// NotFoundError for an unknown run.
std::string report(const std::filesystem::path& root, const std::string& run_id);

}  // namespace crossds
