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
#include <map>
#include <random>

#include "crossds/corpus.hpp"
#include "crossds/errors.hpp"
#include "crossds/synthetic.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crossds;
using crossds::testing::TempDir;
using crossds::testing::write_text;

namespace {

const char* kArchs =
    R"({"model_id": "m1", "name": "Alpha", "source_code": "class A: pass"})"
    "\n"
    R"({"model_id": "m2", "name": "Beta", "source_code": "class B: pass"})"
    "\n"
    R"({"model_id": "m3", "name": "Gamma", "source_code": "class C: pass"})"
    "\n";

std::string datasets_jsonl(bool with_ids) {
  const char* names[] = {"SVHN", "MNIST", "CIFAR-10", "CIFAR-100",
                         "ImageNette", "Places365", "CelebA-Gender"};
  std::string out;
  for (int i = 0; i < 7; ++i) {
    out += "{";
    if (with_ids) out += "\"dataset_id\": " + std::to_string(i + 1) + ", ";
    out += std::string("\"name\": \"") + names[i] +
           "\", \"train_images\": 1000, \"image_height\": 32, \"image_width\": 32, "
           "\"channels\": 3, \"num_classes\": 10}\n";
  }
  return out;
}

std::string accuracies_jsonl() {
  std::string out;
  for (int m = 1; m <= 3; ++m) {
    for (int d = 1; d <= 7; ++d) {
      for (const int e : {1, 5}) {
        out += "{\"model_id\": \"m" + std::to_string(m) + "\", \"dataset_id\": " +
               std::to_string(d) + ", \"epoch\": " + std::to_string(e) +
               ", \"accuracy\": 0." + std::to_string(m * 10 + d) + "}\n";
      }
    }
  }
  return out;
}

void write_corpus(const TempDir& dir, const std::string& accs,
                  bool dataset_ids = true) {
  write_text(dir / "architectures.jsonl", kArchs);
  write_text(dir / "datasets.jsonl", datasets_jsonl(dataset_ids));
  write_text(dir / "accuracies.jsonl", accs);
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

// Independent restatement of the normalization: for every record at the
// reference epoch, scan all records for the dataset maximum.
std::map<std::pair<std::string, std::int64_t>, double> brute_normalize(
    const Corpus& c, std::int64_t epoch) {
  std::map<std::pair<std::string, std::int64_t>, double> out;
  for (const auto& r : c.accuracies()) {
    if (r.epoch != epoch) continue;
    double best = 0.0;
    for (const auto& o : c.accuracies()) {
      if (o.epoch == epoch && o.dataset_id == r.dataset_id) best = std::max(best, o.accuracy);
    }
    out[{r.model_id, r.dataset_id.value}] = r.accuracy / best;
  }
  return out;
}

}  // namespace

TEST_CASE("load_corpus reads the three ingestion files") {
  TempDir dir;
  write_corpus(dir, accuracies_jsonl());
  const auto c = load_corpus(dir.path(), {}, {});
  CHECK(c.architectures().size() == 3);
  CHECK(c.datasets().size() == 7);
  CHECK(c.accuracies().size() == 42);
  CHECK(c.architecture("m2").name == "Beta");
  CHECK(c.dataset(DatasetId{3}).name == "CIFAR-10");
  CHECK(c.find_architecture("nope") == nullptr);
  CHECK_THROWS_AS(c.architecture("nope"), ReferentialError);
}

TEST_CASE("duplicate (model, dataset, epoch) is an integrity error naming the key") {
  TempDir dir;
  write_corpus(dir, accuracies_jsonl() +
                        R"({"model_id": "m1", "dataset_id": 1, "epoch": 5, "accuracy": 0.5})"
                        "\n");
  const auto msg = error_of([&] { load_corpus(dir.path(), {}, {}); });
  CHECK_THROWS_AS(load_corpus(dir.path(), {}, {}), IntegrityError);
  CHECK(msg.find("model m1") != std::string::npos);
  CHECK(msg.find("dataset 1") != std::string::npos);
  CHECK(msg.find("epoch 5") != std::string::npos);
}

TEST_CASE("accuracy outside [0, 1] is a range error") {
  TempDir dir;
  write_corpus(dir, R"({"model_id": "m1", "dataset_id": 1, "epoch": 5, "accuracy": 1.2})"
                    "\n");
  CHECK_THROWS_AS(load_corpus(dir.path(), {}, {}), RangeError);
  write_corpus(dir, R"({"model_id": "m1", "dataset_id": 1, "epoch": 5, "accuracy": -0.1})"
                    "\n");
  CHECK_THROWS_AS(load_corpus(dir.path(), {}, {}), RangeError);
}

TEST_CASE("malformed line reports its line number") {
  TempDir dir;
  write_corpus(dir, R"({"model_id": "m1", "dataset_id": 1, "epoch": 5, "accuracy": 0.5})"
                    "\n{not json\n");
  CHECK_THROWS_AS(load_corpus(dir.path(), {}, {}), ParseError);
  CHECK(error_of([&] { load_corpus(dir.path(), {}, {}); }).find("accuracies.jsonl:2") !=
        std::string::npos);

  write_corpus(dir, R"({"model_id": "m1", "dataset_id": 1, "accuracy": 0.5})"
                    "\n");
  CHECK(error_of([&] { load_corpus(dir.path(), {}, {}); })
            .find("accuracies.jsonl:1: missing key \"epoch\"") != std::string::npos);
}

TEST_CASE("dataset ids default to the lexicographic rank of the name") {
  TempDir dir;
  write_corpus(dir,
               R"({"model_id": "m1", "dataset_id": "MNIST", "epoch": 5, "accuracy": 0.5})"
               "\n",
               /*dataset_ids=*/false);
  const auto c = load_corpus(dir.path(), {}, {});
  // CIFAR-10 < CIFAR-100 < CelebA-Gender < ImageNette < MNIST < Places365 < SVHN
  CHECK(c.find_dataset_by_name("CIFAR-10")->id.value == 1);
  CHECK(c.find_dataset_by_name("CIFAR-100")->id.value == 2);
  CHECK(c.find_dataset_by_name("CelebA-Gender")->id.value == 3);
  CHECK(c.find_dataset_by_name("SVHN")->id.value == 7);
  REQUIRE(c.accuracies().size() == 1);
  CHECK(c.accuracies()[0].dataset_id.value == 5);
}

TEST_CASE("unknown keys are ignored with a warning") {
  TempDir dir;
  write_corpus(
      dir, R"({"model_id": "m1", "dataset_id": 1, "epoch": 5, "accuracy": 0.5, "top5": 0.9})"
           "\n");
  std::vector<std::string> warnings;
  const auto c = load_corpus(dir.path(), {}, [&](std::string_view w) {
    warnings.emplace_back(w);
  });
  CHECK(c.accuracies().size() == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("top5") != std::string::npos);
}

TEST_CASE("corpus invariants are enforced") {
  using crossds::testing::arch;
  using crossds::testing::dataset;
  SUBCASE("duplicate model id") {
    CHECK_THROWS_AS(Corpus::build({arch("a"), arch("a")}, {}, {}), IntegrityError);
  }
  SUBCASE("empty source code") {
    CHECK_THROWS_AS(Corpus::build({{"a", "A", ""}}, {}, {}), IntegrityError);
  }
  SUBCASE("names colliding after normalization") {
    CHECK_THROWS_AS(Corpus::build({}, {dataset(1, "CIFAR-10"), dataset(2, "cifar 10")}, {}),
                    IntegrityError);
  }
  SUBCASE("fewer than two classes") {
    auto d = dataset(1, "X");
    d.num_classes = 1;
    CHECK_THROWS_AS(Corpus::build({}, {d}, {}), RangeError);
  }
  SUBCASE("dangling references") {
    CHECK_THROWS_AS(Corpus::build({arch("a")}, {dataset(1, "X")},
                                  {{"b", DatasetId{1}, 5, 0.5}}),
                    ReferentialError);
    CHECK_THROWS_AS(Corpus::build({arch("a")}, {dataset(1, "X")},
                                  {{"a", DatasetId{2}, 5, 0.5}}),
                    ReferentialError);
  }
}

TEST_CASE("save_corpus round-trips through load_corpus") {
  TempDir dir;
  SyntheticSpec spec;
  spec.models = 3;
  spec.seed = 11;
  const auto original = make_synthetic_corpus(spec);
  save_corpus(original, dir.path());
  const auto loaded = load_corpus(dir.path(), {}, {});
  REQUIRE(loaded.accuracies().size() == original.accuracies().size());
  for (std::size_t i = 0; i < loaded.accuracies().size(); ++i) {
    CHECK(loaded.accuracies()[i].accuracy == original.accuracies()[i].accuracy);
  }
  CHECK(loaded.architectures()[2].source_code == original.architectures()[2].source_code);
}

TEST_CASE("normalize examples") {
  SUBCASE("two models") {
    const auto c = crossds::testing::grid_corpus({{0.5}, {0.8}});
    const auto n = normalize(c, {});
    CHECK(*n.find("m1", DatasetId{1}) == 0.625);
    CHECK(*n.find("m2", DatasetId{1}) == 1.0);
  }
  SUBCASE("single model") {
    const auto n = normalize(crossds::testing::grid_corpus({{0.3}}), {});
    CHECK(*n.find("m1", DatasetId{1}) == 1.0);
  }
  SUBCASE("all-zero dataset") {
    CHECK_THROWS_AS(normalize(crossds::testing::grid_corpus({{0.0, 0.4}, {0.0, 0.2}}), {}),
                    DegenerateDatasetError);
  }
  SUBCASE("missing measurements stay absent") {
    const auto n = normalize(crossds::testing::grid_corpus({{0.5, -1}, {0.4, 0.7}}), {});
    CHECK(n.size() == 3);
    CHECK_FALSE(n.find("m1", DatasetId{2}).has_value());
  }
  SUBCASE("other epochs are ignored") {
    const auto c = crossds::testing::grid_corpus({{0.5}, {0.8}}, /*epoch=*/4);
    CHECK(normalize(c, {}).size() == 0);
    CHECK(normalize(c, {4}).size() == 2);
    CHECK_THROWS_AS(normalize(c, {-1}), RangeError);
  }
}

TEST_CASE("normalize matches a brute-force recomputation on random corpora") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    SyntheticSpec spec;
    spec.models = 1 + seed % 5;
    spec.datasets = 2 + seed % 6;
    spec.seed = seed;
    spec.missing_probability = 0.2;
    spec.epochs = {3, 5};
    const auto c = make_synthetic_corpus(spec);
    const auto oracle = brute_normalize(c, 5);
    const auto n = normalize(c, {});
    REQUIRE(n.size() == oracle.size());
    for (const auto& v : n.values()) {
      CHECK(v.value == oracle.at({v.model_id, v.dataset_id.value}));
    }
    // Every normalized dataset has a model at exactly 1.0.
    std::map<std::int64_t, double> best;
    for (const auto& v : n.values()) {
      best[v.dataset_id.value] = std::max(best[v.dataset_id.value], v.value);
    }
    for (const auto& [_, b] : best) CHECK(b == 1.0);
  }
}

TEST_CASE("normalize is independent of record order") {
  SyntheticSpec spec;
  spec.seed = 99;
  const auto c = make_synthetic_corpus(spec);
  auto accs = c.accuracies();
  std::mt19937_64 rng(5);
  std::shuffle(accs.begin(), accs.end(), rng);
  const auto shuffled = Corpus::build(c.architectures(), c.datasets(), accs);
  const auto a = normalize(c, {}).values();
  const auto b = normalize(shuffled, {}).values();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].model_id == b[i].model_id);
    CHECK(a[i].dataset_id == b[i].dataset_id);
    CHECK(a[i].value == b[i].value);
  }
}
