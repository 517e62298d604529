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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crossds {

struct DatasetId {
  std::int64_t value = 0;
  friend auto operator<=>(const DatasetId&, const DatasetId&) = default;
};

using ModelId = std::string;

struct ArchitectureRecord {
  ModelId model_id;
  std::string name;
  std::string source_code;
};

struct DatasetMeta {
  DatasetId id;
  std::string name;
  std::int64_t train_images = 0;
  std::int64_t image_height = 0;
  std::int64_t image_width = 0;
  std::int64_t channels = 0;
  std::int64_t num_classes = 0;
};

// One measured accuracy, stored as a fraction in [0, 1].
struct AccuracyRecord {
  ModelId model_id;
  DatasetId dataset_id;
  std::int64_t epoch = 0;
  double accuracy = 0.0;
};

struct CorpusConfig {
  std::int64_t reference_epoch = 5;
};

using WarningSink = std::function<void(std::string_view)>;

// Writes "warning: ..." to stderr.
WarningSink stderr_warnings();

// Immutable, validated collection of architectures, datasets and accuracy
// measurements. Safe to share across threads once built.
class Corpus {
 public:
  // Validates every record invariant; throws IntegrityError, RangeError or
  // ReferentialError on the first violation.
  static Corpus build(std::vector<ArchitectureRecord> architectures,
                      std::vector<DatasetMeta> datasets,
                      std::vector<AccuracyRecord> accuracies);

  // Sorted by model_id.
  const std::vector<ArchitectureRecord>& architectures() const { return architectures_; }
  // Sorted by dataset id.
  const std::vector<DatasetMeta>& datasets() const { return datasets_; }
  // Sorted by (model_id, dataset_id, epoch).
  const std::vector<AccuracyRecord>& accuracies() const { return accuracies_; }

  const ArchitectureRecord* find_architecture(std::string_view model_id) const;
  const DatasetMeta* find_dataset(DatasetId id) const;
  const DatasetMeta* find_dataset_by_name(std::string_view name) const;

  // Throwing lookups (ReferentialError).
  const ArchitectureRecord& architecture(std::string_view model_id) const;
  const DatasetMeta& dataset(DatasetId id) const;

 private:
  std::vector<ArchitectureRecord> architectures_;
  std::vector<DatasetMeta> datasets_;
  std::vector<AccuracyRecord> accuracies_;
  std::map<ModelId, std::size_t, std::less<>> arch_index_;
  std::map<DatasetId, std::size_t> dataset_index_;
};

inline constexpr std::string_view kArchitecturesFile = "architectures.jsonl";
inline constexpr std::string_view kDatasetsFile = "datasets.jsonl";
inline constexpr std::string_view kAccuraciesFile = "accuracies.jsonl";

// Reads the three JSONL ingestion files from `dir`.
//
// datasets.jsonl may omit dataset_id on every line, in which case ids are the
// 1-based lexicographic rank of the dataset name. In accuracies.jsonl the
// dataset_id key may then hold the dataset name instead of an integer.
// Unknown keys are reported through `warn` and otherwise ignored.
Corpus load_corpus(const std::filesystem::path& dir, const CorpusConfig& config,
                   const WarningSink& warn = stderr_warnings());

// Writes `corpus` as the three ingestion files (explicit dataset ids).
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

struct NormalizedAccuracy {
  ModelId model_id;
  DatasetId dataset_id;
  double value = 0.0;
};

// Normalized accuracies keyed by (model, dataset).
class NormalizedTable {
 public:
  NormalizedTable() = default;
  explicit NormalizedTable(std::vector<NormalizedAccuracy> values);

  // Sorted by (model_id, dataset_id).
  const std::vector<NormalizedAccuracy>& values() const { return values_; }
  std::optional<double> find(std::string_view model_id, DatasetId dataset) const;
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<NormalizedAccuracy> values_;
};

// acc(m, d, e) / max over m' of acc(m', d, e) at e = config.reference_epoch.
// Pairs without a record at e are absent. Throws DegenerateDatasetError when a
// dataset's best accuracy at e is zero.
NormalizedTable normalize(const Corpus& corpus, const CorpusConfig& config);

}  // namespace crossds
