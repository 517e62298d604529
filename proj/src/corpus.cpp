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

#include "crossds/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <tuple>

#include "crossds/errors.hpp"
#include "crossds/text.hpp"
#include "io.hpp"

namespace crossds {
namespace {

using io::json;

std::string dataset_label(DatasetId id) { return fmt::format("d{}", id.value); }

void warn_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                       std::string_view file, std::size_t line,
                       const WarningSink& warn) {
  if (!warn) return;
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      warn(fmt::format("{}:{}: ignoring unknown key \"{}\"", file, line, key));
    }
  }
}

const json& require(const json& obj, std::string_view key, std::string_view file,
                    std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(fmt::format("{}:{}: missing key \"{}\"", file, line, key));
  }
  return *it;
}

std::string string_field(const json& obj, std::string_view key, std::string_view file,
                         std::size_t line) {
  const json& v = require(obj, key, file, line);
  if (!v.is_string()) {
    throw ParseError(fmt::format("{}:{}: \"{}\" must be a string", file, line, key));
  }
  return v.get<std::string>();
}

// Model ids are opaque; integer ids in the input are kept as their decimal text.
std::string id_field(const json& obj, std::string_view key, std::string_view file,
                     std::size_t line) {
  const json& v = require(obj, key, file, line);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ParseError(
      fmt::format("{}:{}: \"{}\" must be a string or integer", file, line, key));
}

std::int64_t int_field(const json& obj, std::string_view key, std::string_view file,
                       std::size_t line) {
  const json& v = require(obj, key, file, line);
  if (!v.is_number_integer()) {
    throw ParseError(fmt::format("{}:{}: \"{}\" must be an integer", file, line, key));
  }
  return v.get<std::int64_t>();
}

void check_positive(std::int64_t value, std::string_view what, std::string_view name) {
  if (value <= 0) {
    throw RangeError(fmt::format("dataset \"{}\": {} must be positive, got {}", name,
                                 what, value));
  }
}

}  // namespace

WarningSink stderr_warnings() {
  return [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
}

Corpus Corpus::build(std::vector<ArchitectureRecord> architectures,
                     std::vector<DatasetMeta> datasets,
                     std::vector<AccuracyRecord> accuracies) {
  Corpus c;
  std::sort(architectures.begin(), architectures.end(),
            [](const auto& a, const auto& b) { return a.model_id < b.model_id; });
  for (std::size_t i = 0; i < architectures.size(); ++i) {
    const auto& a = architectures[i];
    if (a.source_code.empty()) {
      throw IntegrityError(fmt::format("architecture \"{}\" has empty source_code",
                                       a.model_id));
    }
    if (i > 0 && architectures[i - 1].model_id == a.model_id) {
      throw IntegrityError(fmt::format("duplicate model_id \"{}\"", a.model_id));
    }
    c.arch_index_.emplace(a.model_id, i);
  }

  std::sort(datasets.begin(), datasets.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::set<std::string> normalized_names;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const auto& d = datasets[i];
    if (i > 0 && datasets[i - 1].id == d.id) {
      throw IntegrityError(fmt::format("duplicate dataset_id {}", d.id.value));
    }
    check_positive(d.train_images, "train_images", d.name);
    check_positive(d.image_height, "image_height", d.name);
    check_positive(d.image_width, "image_width", d.name);
    check_positive(d.channels, "channels", d.name);
    if (d.num_classes < 2) {
      throw RangeError(fmt::format("dataset \"{}\": num_classes must be >= 2, got {}",
                                   d.name, d.num_classes));
    }
    if (d.name.find_first_of("\r\n") != std::string::npos) {
      throw IntegrityError(fmt::format("dataset name \"{}\" spans several lines", d.name));
    }
    const auto norm = normalize_name(d.name);
    if (norm.empty()) {
      throw IntegrityError(fmt::format(
          "dataset name \"{}\" has no letters or digits", d.name));
    }
    if (!normalized_names.insert(norm).second) {
      throw IntegrityError(fmt::format(
          "dataset name \"{}\" collides with another name after normalization",
          d.name));
    }
    c.dataset_index_.emplace(d.id, i);
  }

  std::sort(accuracies.begin(), accuracies.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_id, a.dataset_id, a.epoch) <
           std::tie(b.model_id, b.dataset_id, b.epoch);
  });
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    const auto& r = accuracies[i];
    if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) {
      throw RangeError(fmt::format(
          "accuracy {} for ({}, {}, epoch {}) is outside [0, 1]", r.accuracy,
          r.model_id, dataset_label(r.dataset_id), r.epoch));
    }
    if (r.epoch < 0) {
      throw RangeError(fmt::format("negative epoch {} for ({}, {})", r.epoch,
                                   r.model_id, dataset_label(r.dataset_id)));
    }
    if (i > 0) {
      const auto& p = accuracies[i - 1];
      if (p.model_id == r.model_id && p.dataset_id == r.dataset_id &&
          p.epoch == r.epoch) {
        throw IntegrityError(fmt::format(
            "duplicate accuracy record for (model {}, dataset {}, epoch {})",
            r.model_id, r.dataset_id.value, r.epoch));
      }
    }
    if (!c.arch_index_.contains(r.model_id)) {
      throw ReferentialError(
          fmt::format("accuracy record references unknown model \"{}\"", r.model_id));
    }
    if (!c.dataset_index_.contains(r.dataset_id)) {
      throw ReferentialError(fmt::format(
          "accuracy record references unknown dataset_id {}", r.dataset_id.value));
    }
  }

  c.architectures_ = std::move(architectures);
  c.datasets_ = std::move(datasets);
  c.accuracies_ = std::move(accuracies);
  return c;
}

const ArchitectureRecord* Corpus::find_architecture(std::string_view model_id) const {
  const auto it = arch_index_.find(model_id);
  return it == arch_index_.end() ? nullptr : &architectures_[it->second];
}

const DatasetMeta* Corpus::find_dataset(DatasetId id) const {
  const auto it = dataset_index_.find(id);
  return it == dataset_index_.end() ? nullptr : &datasets_[it->second];
}

const DatasetMeta* Corpus::find_dataset_by_name(std::string_view name) const {
  for (const auto& d : datasets_) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

const ArchitectureRecord& Corpus::architecture(std::string_view model_id) const {
  if (const auto* a = find_architecture(model_id)) return *a;
  throw ReferentialError(fmt::format("unknown model \"{}\"", model_id));
}

const DatasetMeta& Corpus::dataset(DatasetId id) const {
  if (const auto* d = find_dataset(id)) return *d;
  throw ReferentialError(fmt::format("unknown dataset_id {}", id.value));
}

Corpus load_corpus(const std::filesystem::path& dir, const CorpusConfig& config,
                   const WarningSink& warn) {
  if (config.reference_epoch < 0) {
    throw RangeError("reference_epoch must be >= 0");
  }

  std::vector<ArchitectureRecord> archs;
  {
    const std::string file(kArchitecturesFile);
    io::for_each_jsonl(dir / file, [&](const json& obj, std::size_t line) {
      warn_unknown_keys(obj, {"model_id", "name", "source_code"}, file, line, warn);
      archs.push_back({id_field(obj, "model_id", file, line),
                       string_field(obj, "name", file, line),
                       string_field(obj, "source_code", file, line)});
    });
  }

  std::vector<DatasetMeta> datasets;
  std::size_t with_id = 0;
  {
    const std::string file(kDatasetsFile);
    io::for_each_jsonl(dir / file, [&](const json& obj, std::size_t line) {
      warn_unknown_keys(obj,
                        {"dataset_id", "name", "train_images", "image_height",
                         "image_width", "channels", "num_classes"},
                        file, line, warn);
      DatasetMeta d;
      if (obj.contains("dataset_id")) {
        d.id = DatasetId{int_field(obj, "dataset_id", file, line)};
        ++with_id;
      }
      d.name = string_field(obj, "name", file, line);
      d.train_images = int_field(obj, "train_images", file, line);
      d.image_height = int_field(obj, "image_height", file, line);
      d.image_width = int_field(obj, "image_width", file, line);
      d.channels = int_field(obj, "channels", file, line);
      d.num_classes = int_field(obj, "num_classes", file, line);
      datasets.push_back(std::move(d));
    });
  }
  if (with_id != 0 && with_id != datasets.size()) {
    throw IntegrityError(
        "datasets.jsonl must give dataset_id on every line or on none");
  }
  if (with_id == 0) {
    std::vector<std::size_t> order(datasets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return datasets[a].name < datasets[b].name;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      datasets[order[rank]].id = DatasetId{static_cast<std::int64_t>(rank + 1)};
    }
  }

  std::vector<AccuracyRecord> accs;
  {
    const std::string file(kAccuraciesFile);
    io::for_each_jsonl(dir / file, [&](const json& obj, std::size_t line) {
      warn_unknown_keys(obj, {"model_id", "dataset_id", "epoch", "accuracy"}, file,
                        line, warn);
      AccuracyRecord r;
      r.model_id = id_field(obj, "model_id", file, line);
      const json& ds = require(obj, "dataset_id", file, line);
      if (ds.is_number_integer()) {
        r.dataset_id = DatasetId{ds.get<std::int64_t>()};
      } else if (ds.is_string()) {
        const auto name = ds.get<std::string>();
        const auto it = std::find_if(datasets.begin(), datasets.end(),
                                     [&](const auto& d) { return d.name == name; });
        if (it == datasets.end()) {
          throw ReferentialError(
              fmt::format("{}:{}: unknown dataset \"{}\"", file, line, name));
        }
        r.dataset_id = it->id;
      } else {
        throw ParseError(fmt::format(
            "{}:{}: \"dataset_id\" must be an integer or dataset name", file, line));
      }
      r.epoch = int_field(obj, "epoch", file, line);
      const json& acc = require(obj, "accuracy", file, line);
      if (!acc.is_number()) {
        throw ParseError(
            fmt::format("{}:{}: \"accuracy\" must be a number", file, line));
      }
      r.accuracy = acc.get<double>();
      if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) {
        throw RangeError(fmt::format("{}:{}: accuracy {} is outside [0, 1]", file,
                                     line, r.accuracy));
      }
      accs.push_back(std::move(r));
    });
  }

  return Corpus::build(std::move(archs), std::move(datasets), std::move(accs));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    io::AtomicFile out(dir / std::string(kArchitecturesFile));
    for (const auto& a : corpus.architectures()) {
      out.write(io::dump_line(json{{"model_id", a.model_id},
                                   {"name", a.name},
                                   {"source_code", a.source_code}}));
      out.write("\n");
    }
    out.commit();
  }
  {
    io::AtomicFile out(dir / std::string(kDatasetsFile));
    for (const auto& d : corpus.datasets()) {
      out.write(io::dump_line(json{{"dataset_id", d.id.value},
                                   {"name", d.name},
                                   {"train_images", d.train_images},
                                   {"image_height", d.image_height},
                                   {"image_width", d.image_width},
                                   {"channels", d.channels},
                                   {"num_classes", d.num_classes}}));
      out.write("\n");
    }
    out.commit();
  }
  {
    io::AtomicFile out(dir / std::string(kAccuraciesFile));
    for (const auto& r : corpus.accuracies()) {
      out.write(io::dump_line(json{{"model_id", r.model_id},
                                   {"dataset_id", r.dataset_id.value},
                                   {"epoch", r.epoch},
                                   {"accuracy", r.accuracy}}));
      out.write("\n");
    }
    out.commit();
  }
}

NormalizedTable::NormalizedTable(std::vector<NormalizedAccuracy> values)
    : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_id, a.dataset_id) < std::tie(b.model_id, b.dataset_id);
  });
}

std::optional<double> NormalizedTable::find(std::string_view model_id,
                                            DatasetId dataset) const {
  const auto it = std::lower_bound(
      values_.begin(), values_.end(), std::pair{model_id, dataset},
      [](const NormalizedAccuracy& v, const std::pair<std::string_view, DatasetId>& k) {
        const int c = std::string_view(v.model_id).compare(k.first);
        return c < 0 || (c == 0 && v.dataset_id < k.second);
      });
  if (it == values_.end() || it->model_id != model_id || it->dataset_id != dataset) {
    return std::nullopt;
  }
  return it->value;
}

NormalizedTable normalize(const Corpus& corpus, const CorpusConfig& config) {
  if (config.reference_epoch < 0) {
    throw RangeError("reference_epoch must be >= 0");
  }
  std::map<DatasetId, double> best;
  for (const auto& r : corpus.accuracies()) {
    if (r.epoch != config.reference_epoch) continue;
    auto [it, inserted] = best.emplace(r.dataset_id, r.accuracy);
    if (!inserted) it->second = std::max(it->second, r.accuracy);
  }
  for (const auto& [id, max_acc] : best) {
    if (max_acc <= 0.0) {
      throw DegenerateDatasetError(fmt::format(
          "dataset \"{}\" has zero best accuracy at epoch {}",
          corpus.dataset(id).name, config.reference_epoch));
    }
  }
  std::vector<NormalizedAccuracy> out;
  for (const auto& r : corpus.accuracies()) {
    if (r.epoch != config.reference_epoch) continue;
    out.push_back({r.model_id, r.dataset_id, r.accuracy / best.at(r.dataset_id)});
  }
  return NormalizedTable(std::move(out));
}

}  // namespace crossds
