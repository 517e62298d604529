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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossds/corpus.hpp"
#include "crossds/pairgen.hpp"

namespace crossds {

// Ordered from strictest to loosest.
enum class MatchTier { kExact, kSubstring, kNormalizedSubstring, kNone };

std::string_view tier_name(MatchTier tier);

struct MatchResult {
  std::optional<std::string> matched;  // one of the two candidates
  MatchTier tier = MatchTier::kNone;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// Cascaded matching of free-form output against two distinct candidate
// names:
//   1. trimmed output equals a candidate;
//   2. exactly one candidate occurs in the output;
//   3. exactly one normalized candidate occurs in the normalized output.
// A tier that hits both candidates is skipped. Nothing unique -> kNone.
MatchResult match(std::string_view raw_text, std::string_view candidate_a,
                  std::string_view candidate_b);

struct Prediction {
  std::string sample_id;
  std::string raw_text;
  std::optional<DatasetId> matched;
  MatchTier tier = MatchTier::kNone;
  bool correct = false;
};

Prediction judge(const PairSample& sample, std::string raw_text, const Corpus& corpus);

// How a pairwise sample's outcome is credited in the per-dataset breakdown.
enum class Attribution {
  kBoth,       // to both datasets of the pair
  kLabel,      // to the ground-truth dataset only
  kPredicted,  // to the dataset the output matched (unmatched: nowhere)
};

std::string_view attribution_name(Attribution a);
Attribution parse_attribution(std::string_view text);

struct DatasetTally {
  std::size_t attributed = 0;
  std::size_t correct = 0;

  std::optional<double> accuracy() const;
};

struct EpochReport {
  std::int64_t epoch = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  // Samples with no prediction (transport or parse failure); not in total.
  std::size_t error_count = 0;
  Attribution attribution = Attribution::kBoth;
  std::map<DatasetId, DatasetTally> per_dataset;

  // correct / total; absent when total == 0.
  std::optional<double> accuracy() const;
};

// Scores one evaluation pass. `samples` is the test set; samples without a
// prediction count as errors. IntegrityError for a prediction naming an
// unknown or already-scored sample.
EpochReport score_epoch(const std::vector<Prediction>& predictions,
                        const std::vector<PairSample>& samples, std::int64_t epoch,
                        Attribution attribution = Attribution::kBoth);

// Sums per-dataset tallies over several epochs.
std::map<DatasetId, DatasetTally> aggregate_per_dataset(
    const std::vector<EpochReport>& reports);

std::string epoch_report_json(const EpochReport& report, const Corpus& corpus);
EpochReport parse_epoch_report(std::string_view json_text);
std::string epoch_report_name(std::int64_t epoch);  // epoch_report_<n>.json

// curve.csv: epoch,correct,total,accuracy then one accuracy column per
// dataset seen in any report. OrderingError unless epochs strictly increase.
// Returns the number of data rows.
std::size_t emit_curve(const std::vector<EpochReport>& reports, const Corpus& corpus,
                       const std::filesystem::path& path);
std::string curve_csv(const std::vector<EpochReport>& reports, const Corpus& corpus);

// per_dataset.csv: dataset,attributed,correct,accuracy aggregated over the
// given reports.
std::size_t emit_per_dataset(const std::vector<EpochReport>& reports,
                             const Corpus& corpus, const std::filesystem::path& path);
std::string per_dataset_csv(const std::vector<EpochReport>& reports,
                            const Corpus& corpus);

}  // namespace crossds
