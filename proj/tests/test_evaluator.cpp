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

#include <random>

#include "crossds/errors.hpp"
#include "crossds/evaluator.hpp"
#include "crossds/synthetic.hpp"
#include "crossds/text.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crossds;
using crossds::testing::read_text;

namespace {

// Test-set stand-in: n samples over datasets 1..4, label alternating.
std::vector<PairSample> samples(std::size_t n) {
  std::vector<PairSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairSample s;
    s.sample_id = "s" + std::to_string(i);
    s.model_id = "m";
    s.dataset_a = DatasetId{static_cast<std::int64_t>(1 + i % 3)};
    s.dataset_b = DatasetId{4};
    s.label = i % 2 ? s.dataset_a : s.dataset_b;
    out.push_back(s);
  }
  return out;
}

std::vector<Prediction> predictions(const std::vector<PairSample>& ss,
                                    std::size_t correct) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < ss.size(); ++i) {
    Prediction p;
    p.sample_id = ss[i].sample_id;
    p.correct = i < correct;
    const auto other = ss[i].label == ss[i].dataset_a ? ss[i].dataset_b : ss[i].dataset_a;
    p.matched = p.correct ? ss[i].label : other;
    p.tier = MatchTier::kExact;
    out.push_back(p);
  }
  return out;
}

Corpus four_datasets() {
  using crossds::testing::dataset;
  return Corpus::build({crossds::testing::arch("m")},
                       {dataset(1, "CIFAR-10"), dataset(2, "SVHN"), dataset(3, "MNIST"),
                        dataset(4, "Places, 365")},
                       {});
}

}  // namespace

TEST_CASE("match cascade examples") {
  CHECK(match("CIFAR-10", "CIFAR-10", "SVHN") ==
        MatchResult{"CIFAR-10", MatchTier::kExact});
  CHECK(match("  SVHN \n", "CIFAR-10", "SVHN") == MatchResult{"SVHN", MatchTier::kExact});
  CHECK(match("The answer is SVHN.", "CIFAR-10", "SVHN") ==
        MatchResult{"SVHN", MatchTier::kSubstring});
  CHECK(match("cifar10 is better", "CIFAR-10", "SVHN") ==
        MatchResult{"CIFAR-10", MatchTier::kNormalizedSubstring});
  CHECK(match("I cannot decide", "CIFAR-10", "SVHN") ==
        MatchResult{std::nullopt, MatchTier::kNone});
}

TEST_CASE("a tier hitting both names falls through; exhaustion yields none") {
  CHECK(match("CIFAR-10 or SVHN", "CIFAR-10", "SVHN").tier == MatchTier::kNone);
  // No literal hit, and the normalized tier hits both.
  CHECK(match("cifar10 vs Svhn", "CIFAR-10", "SVHN").tier == MatchTier::kNone);
  // Both occur literally only in normalized form for one of them.
  CHECK(match("SVHN, not cifar 10... wait, svhn", "CIFAR-10", "SVHN") ==
        MatchResult{"SVHN", MatchTier::kSubstring});
  // CIFAR-10 is a substring of CIFAR-100, so only the exact tier separates them.
  CHECK(match("CIFAR-100", "CIFAR-10", "CIFAR-100") ==
        MatchResult{"CIFAR-100", MatchTier::kExact});
  CHECK(match("It is CIFAR-100.", "CIFAR-10", "CIFAR-100").tier == MatchTier::kNone);
  CHECK(match("It is CIFAR-10.", "CIFAR-10", "CIFAR-100") ==
        MatchResult{"CIFAR-10", MatchTier::kSubstring});
}

TEST_CASE("match is symmetric in candidate order") {
  const std::vector<std::string> names = {"CIFAR-10", "CIFAR-100", "SVHN", "MNIST",
                                          "CelebA-Gender", "Places365", "ImageNette"};
  const std::vector<std::string> pieces = {"cifar", "10", "-", " ", "0", "SVHN", "svhn",
                                           "MNIST", "celeba", "gender", "Places", "365",
                                           ".", "\n", "The answer is ", "CelebA-Gender",
                                           "imagenette", "CIFAR-100", "CIFAR-10"};
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 10000; ++i) {
    const auto& a = names[rng() % names.size()];
    auto b = names[rng() % names.size()];
    if (a == b) b = a == "SVHN" ? "MNIST" : "SVHN";
    std::string raw;
    const auto parts = rng() % 5;
    for (std::uint64_t k = 0; k < parts; ++k) raw += pieces[rng() % pieces.size()];
    const auto ab = match(raw, a, b);
    CHECK(ab == match(raw, b, a));
    if (std::string(trim(raw)) == a) CHECK(ab.tier == MatchTier::kExact);
  }
}

TEST_CASE("judge resolves the matched dataset and correctness") {
  const auto c = four_datasets();
  PairSample s{"x", "m", DatasetId{1}, DatasetId{2}, DatasetId{2}, 0.5, 1.0, 0.5};
  auto p = judge(s, "svhn", c);
  CHECK(p.correct);
  CHECK(p.matched == DatasetId{2});
  CHECK(p.tier == MatchTier::kNormalizedSubstring);
  p = judge(s, "CIFAR-10", c);
  CHECK_FALSE(p.correct);
  CHECK(p.matched == DatasetId{1});
  p = judge(s, "no idea", c);
  CHECK_FALSE(p.correct);
  CHECK_FALSE(p.matched.has_value());
}

TEST_CASE("score_epoch reproduces 24/30 and 6/30") {
  const auto ss = samples(30);
  const auto hi = score_epoch(predictions(ss, 24), ss, 15);
  CHECK(hi.correct == 24);
  CHECK(hi.total == 30);
  CHECK(*hi.accuracy() == doctest::Approx(0.8).epsilon(1e-12));
  const auto lo = score_epoch(predictions(ss, 6), ss, 0);
  CHECK(*lo.accuracy() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("score_epoch edge cases") {
  SUBCASE("empty") {
    const auto r = score_epoch({}, {}, 0);
    CHECK(r.total == 0);
    CHECK_FALSE(r.accuracy().has_value());
    CHECK(epoch_report_json(r, four_datasets()).find("\"accuracy\": null") !=
          std::string::npos);
  }
  SUBCASE("unknown sample") {
    auto ps = predictions(samples(3), 1);
    ps[1].sample_id = "ghost";
    CHECK_THROWS_AS(score_epoch(ps, samples(3), 0), IntegrityError);
  }
  SUBCASE("duplicate prediction") {
    auto ps = predictions(samples(3), 1);
    ps.push_back(ps[0]);
    CHECK_THROWS_AS(score_epoch(ps, samples(3), 0), IntegrityError);
  }
  SUBCASE("missing responses are errors, not wrong answers") {
    const auto ss = samples(10);
    auto ps = predictions(ss, 5);
    ps.erase(ps.begin() + 7, ps.end());
    const auto r = score_epoch(ps, ss, 2);
    CHECK(r.total == 7);
    CHECK(r.correct == 5);
    CHECK(r.error_count == 3);
  }
}

TEST_CASE("score_epoch equals a brute-force recount") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 100; ++round) {
    const auto ss = samples(1 + rng() % 40);
    std::vector<Prediction> ps;
    for (const auto& s : ss) {
      if (rng() % 6 == 0) continue;
      Prediction p;
      p.sample_id = s.sample_id;
      const auto pick = rng() % 3;
      if (pick < 2) p.matched = pick == 0 ? s.dataset_a : s.dataset_b;
      p.correct = p.matched && *p.matched == s.label;
      ps.push_back(p);
    }
    for (const auto mode : {Attribution::kBoth, Attribution::kLabel, Attribution::kPredicted}) {
      const auto r = score_epoch(ps, ss, 1, mode);
      std::size_t correct = 0;
      std::map<DatasetId, DatasetTally> tallies;
      for (const auto& p : ps) {
        correct += p.correct;
        const auto& s = *std::find_if(ss.begin(), ss.end(),
                                      [&](const auto& x) { return x.sample_id == p.sample_id; });
        std::vector<DatasetId> credited;
        if (mode == Attribution::kBoth) credited = {s.dataset_a, s.dataset_b};
        if (mode == Attribution::kLabel) credited = {s.label};
        if (mode == Attribution::kPredicted && p.matched) credited = {*p.matched};
        for (const auto d : credited) {
          ++tallies[d].attributed;
          tallies[d].correct += p.correct;
        }
      }
      CHECK(r.total == ps.size());
      CHECK(r.correct == correct);
      CHECK(r.error_count == ss.size() - ps.size());
      REQUIRE(r.per_dataset.size() == tallies.size());
      std::size_t attributed = 0;
      for (const auto& [d, t] : tallies) {
        CHECK(r.per_dataset.at(d).attributed == t.attributed);
        CHECK(r.per_dataset.at(d).correct == t.correct);
        attributed += r.per_dataset.at(d).attributed;
      }
      if (mode == Attribution::kBoth) CHECK(attributed == 2 * r.total);
      if (mode == Attribution::kLabel) CHECK(attributed == r.total);
    }
  }
}

TEST_CASE("curve and per-dataset CSV") {
  const auto c = four_datasets();
  const auto ss = samples(30);
  std::vector<EpochReport> reports;
  const std::size_t correct[] = {6, 14, 15, 17, 20, 21, 23, 23, 24};
  const std::int64_t epochs[] = {0, 2, 4, 6, 9, 10, 12, 13, 15};
  for (int i = 0; i < 9; ++i) {
    reports.push_back(score_epoch(predictions(ss, correct[i]), ss, epochs[i]));
  }
  crossds::testing::TempDir dir;
  CHECK(emit_curve(reports, c, dir / "curve.csv") == 9);
  const auto text = read_text(dir / "curve.csv");
  CHECK(crossds::testing::count_lines(text) == 10);
  CHECK(text.rfind("epoch,correct,total,accuracy,CIFAR-10,SVHN,MNIST,\"Places, 365\"\n", 0) == 0);
  CHECK(text.find("\n0,6,30,0.200000,") != std::string::npos);
  CHECK(text.find("\n15,24,30,0.800000,") != std::string::npos);

  emit_curve(reports, c, dir / "again.csv");
  CHECK(read_text(dir / "again.csv") == text);

  auto shuffled = reports;
  std::swap(shuffled[2], shuffled[5]);
  CHECK_THROWS_AS(emit_curve(shuffled, c, dir / "bad.csv"), OrderingError);

  CHECK(emit_per_dataset(reports, c, dir / "per_dataset.csv") == 4);
  const auto per = read_text(dir / "per_dataset.csv");
  CHECK(per.rfind("dataset,attributed,correct,accuracy\n", 0) == 0);
  // Dataset 4 is in every pair: 9 epochs x 30 samples.
  CHECK(per.find("\"Places, 365\",270,163,") != std::string::npos);
}

TEST_CASE("epoch report JSON round trip") {
  const auto c = four_datasets();
  const auto ss = samples(12);
  const auto r = score_epoch(predictions(ss, 5), ss, 3, Attribution::kLabel);
  const auto back = parse_epoch_report(epoch_report_json(r, c));
  CHECK(back.epoch == 3);
  CHECK(back.correct == 5);
  CHECK(back.total == 12);
  CHECK(back.attribution == Attribution::kLabel);
  REQUIRE(back.per_dataset.size() == r.per_dataset.size());
  for (const auto& [d, t] : r.per_dataset) {
    CHECK(back.per_dataset.at(d).attributed == t.attributed);
    CHECK(back.per_dataset.at(d).correct == t.correct);
  }
  CHECK_THROWS_AS(parse_epoch_report("{}"), ParseError);
  CHECK(parse_attribution("predicted") == Attribution::kPredicted);
  CHECK_THROWS_AS(parse_attribution("first"), ParseError);
}
