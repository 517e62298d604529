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
#include <optional>
#include <vector>

#include "crossds/corpus.hpp"

namespace crossds {

// Parameters for a randomly generated corpus. The first seven datasets carry
// the metadata of CelebA-Gender, CIFAR-10, CIFAR-100, ImageNette, MNIST,
// Places365 and SVHN; further ones are named "Synthetic-<k>".
struct SyntheticSpec {
  std::size_t models = 5;
  std::size_t datasets = 7;
  std::vector<std::int64_t> epochs = {1, 5};
  std::uint64_t seed = 1;
  // Accuracy range at generation time.
  double min_accuracy = 0.05;
  double max_accuracy = 0.95;
  // When set, accuracies are integer multiples of this step (e.g. 2^-12), so
  // that scaling by small integers and powers of two is exact.
  std::optional<double> accuracy_step;
  // Probability that a (model, dataset) measurement is missing entirely.
  double missing_probability = 0.0;
};

// Deterministic for a given spec. Generated source code holds no decimal
// literals and varies in length from a few hundred to several thousand
// characters.
Corpus make_synthetic_corpus(const SyntheticSpec& spec);

// Copy of `corpus` with every accuracy on `dataset` at `epoch` multiplied by
// `factor`. RangeError if a scaled accuracy leaves [0, 1].
Corpus scale_dataset(const Corpus& corpus, DatasetId dataset, std::int64_t epoch,
                     double factor);

}  // namespace crossds
