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

#include "crossds/synthetic.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <random>
#include <string>

#include "crossds/errors.hpp"

namespace crossds {
namespace {

struct KnownDataset {
  const char* name;
  std::int64_t train_images, height, width, channels, classes;
};

constexpr std::array<KnownDataset, 7> kKnown = {{
    {"CelebA-Gender", 162770, 64, 64, 3, 2},
    {"CIFAR-10", 50000, 32, 32, 3, 10},
    {"CIFAR-100", 50000, 32, 32, 3, 100},
    {"ImageNette", 9469, 160, 160, 3, 10},
    {"MNIST", 60000, 28, 28, 1, 10},
    {"Places365", 1803460, 256, 256, 3, 365},
    {"SVHN", 73257, 32, 32, 3, 10},
}};

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t below(std::mt19937_64& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>(unit(rng) * static_cast<double>(bound));
}

std::string make_code(std::size_t index, std::mt19937_64& rng) {
  static constexpr std::array<const char*, 4> kActivations = {"ReLU", "GELU", "SiLU",
                                                              "Hardswish"};
  const auto blocks = 2 + below(rng, 30);
  std::string code = "import torch\nimport torch.nn as nn\n\n\n";
  code += fmt::format("class Net{}(nn.Module):\n", index);
  code += "    def __init__(self, in_shape, out_shape, prm, device):\n";
  code += "        super().__init__()\n";
  code += "        layers = []\n";
  std::uint64_t channels = 3;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const auto out = 16u << below(rng, 5);
    const auto kernel = 1 + 2 * below(rng, 3);
    code += fmt::format(
        "        layers.append(nn.Conv2d({}, {}, kernel_size={}, padding={}))\n",
        channels, out, kernel, kernel / 2);
    code += fmt::format("        layers.append(nn.BatchNorm2d({}))\n", out);
    code += fmt::format("        layers.append(nn.{}())\n",
                        kActivations[below(rng, kActivations.size())]);
    if (below(rng, 3) == 0) code += "        layers.append(nn.MaxPool2d(2))\n";
    channels = out;
  }
  code += "        self.features = nn.Sequential(*layers)\n";
  code += "        self.pool = nn.AdaptiveAvgPool2d(1)\n";
  code += fmt::format("        self.head = nn.Linear({}, out_shape[0])\n\n", channels);
  code += "    def forward(self, x):\n";
  code += "        x = self.pool(self.features(x))\n";
  code += "        return self.head(torch.flatten(x, 1))\n";
  return code;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (!(spec.min_accuracy >= 0.0 && spec.min_accuracy <= spec.max_accuracy &&
        spec.max_accuracy <= 1.0)) {
    throw RangeError("synthetic accuracy range must lie within [0, 1]");
  }
  std::mt19937_64 rng(spec.seed);

  std::vector<DatasetMeta> datasets;
  for (std::size_t k = 0; k < spec.datasets; ++k) {
    DatasetMeta d;
    d.id = DatasetId{static_cast<std::int64_t>(k + 1)};
    if (k < kKnown.size()) {
      const auto& known = kKnown[k];
      d.name = known.name;
      d.train_images = known.train_images;
      d.image_height = known.height;
      d.image_width = known.width;
      d.channels = known.channels;
      d.num_classes = known.classes;
    } else {
      d.name = fmt::format("Synthetic-{}", k + 1);
      d.train_images = 1000 + static_cast<std::int64_t>(below(rng, 100000));
      d.image_height = d.image_width = 16 << below(rng, 4);
      d.channels = below(rng, 2) == 0 ? 1 : 3;
      d.num_classes = 2 + static_cast<std::int64_t>(below(rng, 200));
    }
    datasets.push_back(std::move(d));
  }

  std::vector<ArchitectureRecord> archs;
  for (std::size_t m = 0; m < spec.models; ++m) {
    archs.push_back({fmt::format("m{:03}", m + 1), fmt::format("Net{}", m + 1),
                     make_code(m + 1, rng)});
  }

  std::vector<AccuracyRecord> accs;
  for (const auto& a : archs) {
    for (const auto& d : datasets) {
      if (spec.missing_probability > 0.0 && unit(rng) < spec.missing_probability) {
        continue;
      }
      for (const auto epoch : spec.epochs) {
        double acc = spec.min_accuracy +
                     unit(rng) * (spec.max_accuracy - spec.min_accuracy);
        if (spec.accuracy_step) {
          const double step = *spec.accuracy_step;
          acc = std::max(1.0, std::round(acc / step)) * step;
          acc = std::min(acc, std::floor(spec.max_accuracy / step) * step);
        }
        accs.push_back({a.model_id, d.id, epoch, acc});
      }
    }
  }
  return Corpus::build(std::move(archs), std::move(datasets), std::move(accs));
}

Corpus scale_dataset(const Corpus& corpus, DatasetId dataset, std::int64_t epoch,
                     double factor) {
  std::vector<AccuracyRecord> accs = corpus.accuracies();
  for (auto& r : accs) {
    if (r.dataset_id == dataset && r.epoch == epoch) r.accuracy *= factor;
  }
  return Corpus::build(corpus.architectures(), corpus.datasets(), std::move(accs));
}

}  // namespace crossds
