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

#include "crossds/pairgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "crossds/errors.hpp"
#include "io.hpp"

namespace crossds {
namespace {

using io::json;

// Unbiased draw in [0, bound). std::uniform_int_distribution is
// implementation-defined, which would make splits differ across standard
// libraries.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(draw_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

std::string make_sample_id(std::string_view model_id, DatasetId a, DatasetId b) {
  return fmt::format("{}#{}-{}", model_id, a.value, b.value);
}

std::vector<PairSample> generate_pairs(const NormalizedTable& norm,
                                       const Corpus& corpus) {
  std::vector<PairSample> out;
  const auto& values = norm.values();
  // values are grouped by model and ascending by dataset id, so j > i inside
  // a group is exactly the a.id < b.id half of the self-join.
  std::size_t begin = 0;
  while (begin < values.size()) {
    std::size_t end = begin;
    while (end < values.size() && values[end].model_id == values[begin].model_id) {
      ++end;
    }
    const auto& model_id = values[begin].model_id;
    corpus.architecture(model_id);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) {
        const auto& a = values[i];
        const auto& b = values[j];
        if (a.value == b.value) continue;
        PairSample s;
        s.sample_id = make_sample_id(model_id, a.dataset_id, b.dataset_id);
        s.model_id = model_id;
        s.dataset_a = a.dataset_id;
        s.dataset_b = b.dataset_id;
        s.label = a.value > b.value ? a.dataset_id : b.dataset_id;
        s.norm_acc_a = a.value;
        s.norm_acc_b = b.value;
        s.margin = std::fabs(a.value - b.value);
        out.push_back(std::move(s));
      }
    }
    begin = end;
  }
  return out;
}

std::size_t SplitSpec::resolve_test_size(std::size_t sample_count) const {
  std::size_t wanted = 0;
  if (test_size) {
    wanted = *test_size;
  } else if (test_fraction) {
    const double f = *test_fraction;
    if (!(f > 0.0 && f < 1.0)) {
      throw RangeError(fmt::format("test_fraction must be in (0, 1), got {}", f));
    }
    wanted = static_cast<std::size_t>(
        std::floor(f * static_cast<double>(sample_count)));
  }
  if (wanted > sample_count) {
    throw SizeError(fmt::format("test size {} exceeds sample count {}", wanted,
                                sample_count));
  }
  return wanted;
}

Split split(const std::vector<PairSample>& samples, const SplitSpec& spec) {
  const std::size_t test_size = spec.resolve_test_size(samples.size());

  std::map<DatasetId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    groups[samples[i].label].push_back(i);
  }
  std::mt19937_64 rng(spec.seed);
  for (auto& [_, members] : groups) shuffle(members, rng);

  struct Quota {
    DatasetId label;
    std::size_t size;
    std::size_t take = 0;
    std::size_t remainder = 0;  // numerator of the fractional share
  };
  std::vector<Quota> quotas;
  for (const auto& [label, members] : groups) {
    quotas.push_back({label, members.size()});
  }

  const std::size_t n_groups = quotas.size();
  if (test_size >= n_groups) {
    // One slot per class, then the remaining slots proportional to what is
    // left in each class.
    const std::size_t extra = test_size - n_groups;
    const std::size_t pool = samples.size() - n_groups;
    std::size_t assigned = 0;
    for (auto& q : quotas) {
      q.take = 1;
      if (pool > 0) {
        const std::size_t num = extra * (q.size - 1);
        q.take += num / pool;
        q.remainder = num % pool;
        assigned += num / pool;
      }
    }
    std::vector<Quota*> order;
    for (auto& q : quotas) order.push_back(&q);
    std::stable_sort(order.begin(), order.end(), [](const Quota* a, const Quota* b) {
      return a->remainder > b->remainder;
    });
    for (std::size_t k = 0; assigned < extra; ++k) {
      ++order[k]->take;
      ++assigned;
    }
  } else {
    // Not enough slots for every class: the largest classes get one each.
    std::vector<Quota*> order;
    for (auto& q : quotas) order.push_back(&q);
    std::stable_sort(order.begin(), order.end(),
                     [](const Quota* a, const Quota* b) { return a->size > b->size; });
    for (std::size_t k = 0; k < test_size; ++k) order[k]->take = 1;
  }

  std::vector<bool> in_test(samples.size(), false);
  for (const auto& q : quotas) {
    const auto& members = groups.at(q.label);
    for (std::size_t k = 0; k < q.take; ++k) in_test[members[k]] = true;
  }

  Split result;
  result.test.reserve(test_size);
  result.train.reserve(samples.size() - test_size);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (in_test[i] ? result.test : result.train).push_back(samples[i]);
  }
  return result;
}

void write_pairs(const std::filesystem::path& path,
                 const std::vector<PairSample>& samples) {
  io::AtomicFile out(path);
  for (const auto& s : samples) {
    out.write(io::dump_line(json{{"sample_id", s.sample_id},
                                 {"model_id", s.model_id},
                                 {"dataset_a_id", s.dataset_a.value},
                                 {"dataset_b_id", s.dataset_b.value},
                                 {"label_dataset_id", s.label.value},
                                 {"norm_acc_a", s.norm_acc_a},
                                 {"norm_acc_b", s.norm_acc_b},
                                 {"margin", s.margin}}));
    out.write("\n");
  }
  out.commit();
}

std::vector<PairSample> read_pairs(const std::filesystem::path& path) {
  std::vector<PairSample> out;
  io::for_each_jsonl(path, [&](const json& obj, std::size_t) {
    PairSample s;
    s.sample_id = obj.at("sample_id").get<std::string>();
    s.model_id = obj.at("model_id").get<std::string>();
    s.dataset_a = DatasetId{obj.at("dataset_a_id").get<std::int64_t>()};
    s.dataset_b = DatasetId{obj.at("dataset_b_id").get<std::int64_t>()};
    s.label = DatasetId{obj.at("label_dataset_id").get<std::int64_t>()};
    s.norm_acc_a = obj.at("norm_acc_a").get<double>();
    s.norm_acc_b = obj.at("norm_acc_b").get<double>();
    s.margin = obj.at("margin").get<double>();
    out.push_back(std::move(s));
  });
  return out;
}

}  // namespace crossds
