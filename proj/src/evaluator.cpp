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

#include "crossds/evaluator.hpp"

#include <fmt/format.h>

#include <set>

#include "crossds/errors.hpp"
#include "crossds/text.hpp"
#include "io.hpp"

namespace crossds {
namespace {

using io::json;

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

// Picks the unique hit, or nothing if zero or both candidates hit.
std::optional<std::string> unique_hit(bool hit_a, bool hit_b, std::string_view a,
                                      std::string_view b) {
  if (hit_a == hit_b) return std::nullopt;
  return std::string(hit_a ? a : b);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(text);
  }
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_accuracy(std::optional<double> acc) {
  return acc ? fmt::format("{:.6f}", *acc) : std::string{};
}

json accuracy_json(std::optional<double> acc) { return acc ? json(*acc) : json(nullptr); }

}  // namespace

std::string_view tier_name(MatchTier tier) {
  switch (tier) {
    case MatchTier::kExact:
      return "exact";
    case MatchTier::kSubstring:
      return "substring";
    case MatchTier::kNormalizedSubstring:
      return "normalized_substring";
    case MatchTier::kNone:
      return "none";
  }
  return "none";
}

MatchResult match(std::string_view raw_text, std::string_view candidate_a,
                  std::string_view candidate_b) {
  const auto trimmed = trim(raw_text);
  if (trimmed == candidate_a) return {std::string(candidate_a), MatchTier::kExact};
  if (trimmed == candidate_b) return {std::string(candidate_b), MatchTier::kExact};

  if (auto hit = unique_hit(contains(raw_text, candidate_a),
                            contains(raw_text, candidate_b), candidate_a,
                            candidate_b)) {
    return {std::move(hit), MatchTier::kSubstring};
  }

  const auto norm_raw = normalize_name(raw_text);
  const auto norm_a = normalize_name(candidate_a);
  const auto norm_b = normalize_name(candidate_b);
  // An empty normalized name would "occur" everywhere.
  const bool hit_a = !norm_a.empty() && contains(norm_raw, norm_a);
  const bool hit_b = !norm_b.empty() && contains(norm_raw, norm_b);
  if (auto hit = unique_hit(hit_a, hit_b, candidate_a, candidate_b)) {
    return {std::move(hit), MatchTier::kNormalizedSubstring};
  }
  return {std::nullopt, MatchTier::kNone};
}

Prediction judge(const PairSample& sample, std::string raw_text, const Corpus& corpus) {
  const auto& a = corpus.dataset(sample.dataset_a);
  const auto& b = corpus.dataset(sample.dataset_b);
  const auto m = match(raw_text, a.name, b.name);
  Prediction p;
  p.sample_id = sample.sample_id;
  p.tier = m.tier;
  if (m.matched) p.matched = *m.matched == a.name ? a.id : b.id;
  p.correct = p.matched && *p.matched == sample.label;
  p.raw_text = std::move(raw_text);
  return p;
}

std::string_view attribution_name(Attribution a) {
  switch (a) {
    case Attribution::kBoth:
      return "both";
    case Attribution::kLabel:
      return "label";
    case Attribution::kPredicted:
      return "predicted";
  }
  return "both";
}

Attribution parse_attribution(std::string_view text) {
  for (const auto a : {Attribution::kBoth, Attribution::kLabel, Attribution::kPredicted}) {
    if (text == attribution_name(a)) return a;
  }
  throw ParseError(fmt::format("unknown attribution mode \"{}\"", text));
}

std::optional<double> DatasetTally::accuracy() const {
  if (attributed == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(attributed);
}

std::optional<double> EpochReport::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

EpochReport score_epoch(const std::vector<Prediction>& predictions,
                        const std::vector<PairSample>& samples, std::int64_t epoch,
                        Attribution attribution) {
  std::map<std::string_view, const PairSample*> by_id;
  for (const auto& s : samples) by_id.emplace(s.sample_id, &s);

  EpochReport r;
  r.epoch = epoch;
  r.attribution = attribution;
  std::set<std::string_view> scored;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.sample_id);
    if (it == by_id.end()) {
      throw IntegrityError(
          fmt::format("prediction for unknown sample \"{}\"", p.sample_id));
    }
    if (!scored.insert(p.sample_id).second) {
      throw IntegrityError(
          fmt::format("two predictions for sample \"{}\"", p.sample_id));
    }
    const PairSample& s = *it->second;
    ++r.total;
    if (p.correct) ++r.correct;

    const auto credit = [&](DatasetId d) {
      auto& tally = r.per_dataset[d];
      ++tally.attributed;
      if (p.correct) ++tally.correct;
    };
    switch (attribution) {
      case Attribution::kBoth:
        credit(s.dataset_a);
        credit(s.dataset_b);
        break;
      case Attribution::kLabel:
        credit(s.label);
        break;
      case Attribution::kPredicted:
        if (p.matched) credit(*p.matched);
        break;
    }
  }
  r.error_count = samples.size() - scored.size();
  return r;
}

std::map<DatasetId, DatasetTally> aggregate_per_dataset(
    const std::vector<EpochReport>& reports) {
  std::map<DatasetId, DatasetTally> out;
  for (const auto& r : reports) {
    for (const auto& [id, t] : r.per_dataset) {
      out[id].attributed += t.attributed;
      out[id].correct += t.correct;
    }
  }
  return out;
}

std::string epoch_report_json(const EpochReport& report, const Corpus& corpus) {
  json per = json::array();
  for (const auto& [id, t] : report.per_dataset) {
    per.push_back({{"dataset_id", id.value},
                   {"dataset", corpus.dataset(id).name},
                   {"attributed", t.attributed},
                   {"correct", t.correct},
                   {"accuracy", accuracy_json(t.accuracy())}});
  }
  const json j{{"epoch", report.epoch},
               {"correct", report.correct},
               {"total", report.total},
               {"accuracy", accuracy_json(report.accuracy())},
               {"error_count", report.error_count},
               {"attribution", std::string(attribution_name(report.attribution))},
               {"per_dataset", per}};
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

EpochReport parse_epoch_report(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
    EpochReport r;
    r.epoch = j.at("epoch").get<std::int64_t>();
    r.correct = j.at("correct").get<std::size_t>();
    r.total = j.at("total").get<std::size_t>();
    r.error_count = j.at("error_count").get<std::size_t>();
    r.attribution = parse_attribution(j.at("attribution").get<std::string>());
    for (const auto& d : j.at("per_dataset")) {
      auto& t = r.per_dataset[DatasetId{d.at("dataset_id").get<std::int64_t>()}];
      t.attributed = d.at("attributed").get<std::size_t>();
      t.correct = d.at("correct").get<std::size_t>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad epoch report: {}", e.what()));
  }
}

std::string epoch_report_name(std::int64_t epoch) {
  return fmt::format("epoch_report_{}.json", epoch);
}

std::string curve_csv(const std::vector<EpochReport>& reports, const Corpus& corpus) {
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].epoch <= reports[i - 1].epoch) {
      throw OrderingError(fmt::format("epoch {} follows epoch {}", reports[i].epoch,
                                      reports[i - 1].epoch));
    }
  }
  std::set<DatasetId> columns;
  for (const auto& r : reports) {
    for (const auto& [id, _] : r.per_dataset) columns.insert(id);
  }
  std::string out = "epoch,correct,total,accuracy";
  for (const auto id : columns) {
    out += ',';
    out += csv_field(corpus.dataset(id).name);
  }
  out += '\n';
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{}", r.epoch, r.correct, r.total,
                       csv_accuracy(r.accuracy()));
    for (const auto id : columns) {
      const auto it = r.per_dataset.find(id);
      out += ',';
      if (it != r.per_dataset.end()) out += csv_accuracy(it->second.accuracy());
    }
    out += '\n';
  }
  return out;
}

std::size_t emit_curve(const std::vector<EpochReport>& reports, const Corpus& corpus,
                       const std::filesystem::path& path) {
  io::write_file(path, curve_csv(reports, corpus));
  return reports.size();
}

std::string per_dataset_csv(const std::vector<EpochReport>& reports,
                            const Corpus& corpus) {
  std::string out = "dataset,attributed,correct,accuracy\n";
  for (const auto& [id, t] : aggregate_per_dataset(reports)) {
    out += fmt::format("{},{},{},{}\n", csv_field(corpus.dataset(id).name),
                       t.attributed, t.correct, csv_accuracy(t.accuracy()));
  }
  return out;
}

std::size_t emit_per_dataset(const std::vector<EpochReport>& reports,
                             const Corpus& corpus, const std::filesystem::path& path) {
  const auto totals = aggregate_per_dataset(reports);
  io::write_file(path, per_dataset_csv(reports, corpus));
  return totals.size();
}

}  // namespace crossds
