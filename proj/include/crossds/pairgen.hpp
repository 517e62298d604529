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
#include <optional>
#include <string>
#include <vector>

#include "crossds/corpus.hpp"

namespace crossds {

// One labeled "which of these two datasets suits this model better" unit.
// dataset_a < dataset_b always; the label is whichever has the higher
// normalized accuracy, and ties never become samples.
struct PairSample {
  std::string sample_id;
  ModelId model_id;
  DatasetId dataset_a;
  DatasetId dataset_b;
  DatasetId label;
  double norm_acc_a = 0.0;
  double norm_acc_b = 0.0;
  double margin = 0.0;

  friend bool operator==(const PairSample&, const PairSample&) = default;
};

std::string make_sample_id(std::string_view model_id, DatasetId a, DatasetId b);

// Self-join of each model's normalized accuracies over dataset pairs with
// a.id < b.id. Sorted by (model_id, dataset_a, dataset_b).
std::vector<PairSample> generate_pairs(const NormalizedTable& norm,
                                       const Corpus& corpus);

// Either a fraction of the samples (rounded down) or an explicit count goes
// to the test side. An explicit test_size wins when both are set.
struct SplitSpec {
  std::uint64_t seed = 0;
  std::optional<double> test_fraction;
  std::optional<std::size_t> test_size;

  std::size_t resolve_test_size(std::size_t sample_count) const;
};

struct Split {
  std::vector<PairSample> train;
  std::vector<PairSample> test;
};

// Seeded split stratified by label dataset: every label class gets at least
// one test slot while the test size allows it, the rest is shared out in
// proportion to class size (largest remainder). Both halves keep input order.
// Throws SizeError when the requested test size exceeds the sample count.
Split split(const std::vector<PairSample>& samples, const SplitSpec& spec);

void write_pairs(const std::filesystem::path& path,
                 const std::vector<PairSample>& samples);
std::vector<PairSample> read_pairs(const std::filesystem::path& path);

}  // namespace crossds
