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

#include <algorithm>
#include <cmath>
#include <set>

#include "crossds/errors.hpp"
#include "crossds/pairgen.hpp"
#include "crossds/synthetic.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crossds;
using crossds::testing::grid_corpus;

namespace {

// Double loop over every ordered dataset pair, keeping a.id < b.id.
std::vector<PairSample> brute_pairs(const Corpus& c, const NormalizedTable& n) {
  std::vector<PairSample> out;
  for (const auto& m : c.architectures()) {
    for (const auto& a : c.datasets()) {
      for (const auto& b : c.datasets()) {
        if (!(a.id < b.id)) continue;
        const auto va = n.find(m.model_id, a.id);
        const auto vb = n.find(m.model_id, b.id);
        if (!va || !vb || *va == *vb) continue;
        out.push_back({make_sample_id(m.model_id, a.id, b.id), m.model_id, a.id, b.id,
                       *va > *vb ? a.id : b.id, *va, *vb, std::fabs(*va - *vb)});
      }
    }
  }
  return out;
}

std::vector<PairSample> numbered(std::size_t n, std::size_t labels) {
  std::vector<PairSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairSample s;
    s.sample_id = "s" + std::to_string(i);
    s.model_id = "m";
    s.dataset_a = DatasetId{0};
    s.dataset_b = DatasetId{100};
    s.label = DatasetId{static_cast<std::int64_t>(i % labels)};
    out.push_back(s);
  }
  return out;
}

std::set<std::string> ids(const std::vector<PairSample>& v) {
  std::set<std::string> out;
  for (const auto& s : v) out.insert(s.sample_id);
  return out;
}

}  // namespace

TEST_CASE("seven distinct datasets give C(7,2) = 21 pairs") {
  // m2 sets every maximum (its own pairs all tie at 1.0); m1 normalizes to
  // seven distinct values.
  const auto c = grid_corpus({{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7},
                              {0.8, 0.8, 0.8, 0.8, 0.8, 0.8, 0.8}});
  const auto pairs = generate_pairs(normalize(c, {}), c);
  CHECK(pairs.size() == 21);
  for (const auto& p : pairs) CHECK(p.model_id == "m1");
  for (const auto& p : pairs) CHECK(p.dataset_a < p.dataset_b);
}

TEST_CASE("tied normalized values produce no sample") {
  // Both datasets have a single model, so both normalize to 1.0.
  const auto c = grid_corpus({{0.9, 0.9}});
  CHECK(generate_pairs(normalize(c, {}), c).empty());
}

TEST_CASE("label, margin and ordering of a single pair") {
  // Second model pins the maxima so m1 normalizes to {0.6, 1.0}.
  const auto c = grid_corpus({{0.6, 0.5}, {1.0, 0.25}});
  const auto pairs = generate_pairs(normalize(c, {}), c);
  REQUIRE(pairs.size() == 2);
  const auto& p = pairs[0];
  CHECK(p.model_id == "m1");
  CHECK(p.dataset_a.value == 1);
  CHECK(p.dataset_b.value == 2);
  CHECK(p.norm_acc_a == doctest::Approx(0.6));
  CHECK(p.norm_acc_b == 1.0);
  CHECK(p.label.value == 2);
  CHECK(p.margin == doctest::Approx(0.4));
  CHECK(p.sample_id == "m1#1-2");
}

TEST_CASE("empty input gives empty output") {
  const auto c = grid_corpus({});
  CHECK(generate_pairs(NormalizedTable{}, c).empty());
}

TEST_CASE("generate_pairs equals the brute-force self-join on random corpora") {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SyntheticSpec spec;
    spec.models = 1 + seed % 5;
    spec.datasets = 2 + seed % 6;
    spec.seed = seed;
    spec.missing_probability = 0.15;
    // A coarse grid makes ties common.
    spec.accuracy_step = 0.125;
    spec.min_accuracy = 0.125;
    spec.max_accuracy = 0.5;
    const auto c = make_synthetic_corpus(spec);
    const auto n = normalize(c, {});
    const auto got = generate_pairs(n, c);
    if (got != brute_pairs(c, n)) ++mismatches;

    // Per-model count is C(k, 2) minus tied pairs.
    for (const auto& m : c.architectures()) {
      std::vector<double> vals;
      for (const auto& d : c.datasets()) {
        if (auto v = n.find(m.model_id, d.id)) vals.push_back(*v);
      }
      std::size_t ties = 0;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        for (std::size_t j = i + 1; j < vals.size(); ++j) ties += vals[i] == vals[j];
      }
      const auto k = vals.size();
      const auto count = std::count_if(got.begin(), got.end(), [&](const auto& p) {
        return p.model_id == m.model_id;
      });
      CHECK(static_cast<std::size_t>(count) == k * (k - (k > 0)) / 2 - ties);
    }
    std::set<std::string> unique = ids(got);
    CHECK(unique.size() == got.size());
  }
  CHECK(mismatches == 0);
}

TEST_CASE("split examples") {
  SUBCASE("40 samples, 30 test, fixed seed") {
    const auto samples = numbered(40, 7);
    const auto a = split(samples, {7, std::nullopt, 30});
    const auto b = split(samples, {7, std::nullopt, 30});
    CHECK(a.train.size() == 10);
    CHECK(a.test.size() == 30);
    CHECK(a.test == b.test);
    CHECK(a.train == b.train);
  }
  SUBCASE("test size zero") {
    const auto samples = numbered(12, 3);
    const auto s = split(samples, {1, std::nullopt, 0});
    CHECK(s.test.empty());
    CHECK(s.train == samples);
  }
  SUBCASE("fraction rounds the test size down") {
    const auto s = split(numbered(21, 4), {3, 0.5, std::nullopt});
    CHECK(s.test.size() == 10);
    CHECK(s.train.size() == 11);
  }
  SUBCASE("oversized request") {
    CHECK_THROWS_AS(split(numbered(5, 2), {1, std::nullopt, 6}), SizeError);
  }
  SUBCASE("fraction outside (0, 1)") {
    CHECK_THROWS_AS(split(numbered(5, 2), {1, 1.0, std::nullopt}), RangeError);
    CHECK_THROWS_AS(split(numbered(5, 2), {1, 0.0, std::nullopt}), RangeError);
  }
}

TEST_CASE("split is a seeded, stratified partition") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 20 + seed % 40;
    const std::size_t labels = 1 + seed % 7;
    const auto samples = numbered(n, labels);
    const std::size_t t = seed % (n + 1);
    const auto s = split(samples, {seed, std::nullopt, t});
    CHECK(s.test.size() == t);
    CHECK(s.train.size() + s.test.size() == n);

    const auto train_ids = ids(s.train);
    const auto test_ids = ids(s.test);
    std::vector<std::string> both;
    std::set_intersection(train_ids.begin(), train_ids.end(), test_ids.begin(),
                          test_ids.end(), std::back_inserter(both));
    CHECK(both.empty());
    std::set<std::string> all = train_ids;
    all.insert(test_ids.begin(), test_ids.end());
    CHECK(all == ids(samples));

    if (t >= labels) {
      std::set<std::int64_t> present;
      for (const auto& x : s.test) present.insert(x.label.value);
      CHECK(present.size() == labels);
    }
    // Input order is preserved inside each half.
    CHECK(std::is_sorted(s.test.begin(), s.test.end(), [](const auto& a, const auto& b) {
      return std::stoi(a.sample_id.substr(1)) < std::stoi(b.sample_id.substr(1));
    }));
  }
}

TEST_CASE("different seeds usually pick different test sets") {
  const auto samples = numbered(60, 3);
  const auto a = split(samples, {1, std::nullopt, 20});
  const auto b = split(samples, {2, std::nullopt, 20});
  CHECK(ids(a.test) != ids(b.test));
}

TEST_CASE("pairs.jsonl round trip") {
  crossds::testing::TempDir dir;
  SyntheticSpec spec;
  spec.seed = 4;
  const auto c = make_synthetic_corpus(spec);
  const auto pairs = generate_pairs(normalize(c, {}), c);
  write_pairs(dir / "pairs.jsonl", pairs);
  CHECK(read_pairs(dir / "pairs.jsonl") == pairs);
}
