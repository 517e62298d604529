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

#include "crossds/orchestrator.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <memory>
#include <set>
#include <thread>

#include "crossds/errors.hpp"
#include "io.hpp"

namespace crossds {
namespace {

using io::json;
namespace fs = std::filesystem;

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kPairsFile = "pairs.jsonl";

std::string now_utc() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("cannot initialise SHA-256");
    }
  }
  void update(std::string_view bytes) {
    EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
  }
  std::string hex() {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), out, &len);
    std::string s;
    for (unsigned int i = 0; i < len; ++i) s += fmt::format("{:02x}", out[i]);
    return s;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes);
  return h.hex();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

json split_json(const SplitSpec& s) {
  json j{{"seed", s.seed}};
  j["test_size"] = s.test_size ? json(*s.test_size) : json(nullptr);
  j["test_fraction"] = s.test_fraction ? json(*s.test_fraction) : json(nullptr);
  return j;
}

json config_json(const RunConfig& c) {
  return json{
      {"variant", std::string(variant_name(c.variant))},
      {"corpus_path", fs::absolute(c.corpus_path).lexically_normal().string()},
      {"reference_epoch", c.corpus.reference_epoch},
      {"split", split_json(c.split)},
      {"backend", c.backend.to_string()},
      {"max_in_flight", c.backend.max_in_flight},
      {"outer_epochs", c.outer_epochs},
      {"adapter_command", c.adapter_command ? json(*c.adapter_command) : json(nullptr)},
      {"hyperparameters",
       {{"inner_epochs", c.hyper.inner_epochs},
        {"lora", {{"rank", c.hyper.lora_rank},
                  {"alpha", c.hyper.lora_alpha},
                  {"dropout", c.hyper.lora_dropout}}},
        {"scheduler", c.hyper.scheduler},
        {"base_model_id", c.hyper.base_model_id}}},
      {"attribution", std::string(attribution_name(c.attribution))},
      {"code_limit", c.render.code_limit},
      {"randomize_order", c.render.randomize_order},
      {"order_seed", c.render.order_seed},
      {"template_dir", c.template_dir ? json(c.template_dir->string()) : json(nullptr)},
  };
}

SplitSpec effective_split(SplitSpec spec, PromptVariant v) {
  if (!spec.test_size && !spec.test_fraction) spec.test_size = default_test_size(v);
  return spec;
}

TemplateSet templates_for(const std::optional<fs::path>& dir) {
  return dir ? TemplateSet::load(*dir) : TemplateSet::builtin();
}

// Runs the adapter for one outer epoch and waits for its descriptor.
struct AdapterOutcome {
  std::string endpoint;
  std::optional<double> training_loss;
};

AdapterOutcome run_adapter(const RunConfig& config, const fs::path& run_dir,
                           std::int64_t epoch, const fs::path& train_path) {
  const fs::path dir = run_dir / "adapter" / fmt::format("epoch_{}", epoch);
  fs::create_directories(dir);
  const fs::path descriptor = dir / "descriptor.json";
  fs::remove(descriptor);
  const json control{
      {"outer_epoch", epoch},
      {"inner_epochs", config.hyper.inner_epochs},
      {"lora", {{"rank", config.hyper.lora_rank},
                {"alpha", config.hyper.lora_alpha},
                {"dropout", config.hyper.lora_dropout}}},
      {"scheduler", config.hyper.scheduler},
      {"base_model_id", config.hyper.base_model_id},
      {"variant", std::string(variant_name(config.variant))},
      {"train_path", fs::absolute(train_path).string()},
      {"checkpoint_dir", fs::absolute(dir / fmt::format("checkpoint_{}", epoch)).string()},
      {"descriptor_path", fs::absolute(descriptor).string()},
  };
  const fs::path control_path = dir / "control.json";
  io::write_file(control_path, control.dump(2) + "\n");

  const std::string command =
      *config.adapter_command + " " + shell_quote(fs::absolute(control_path).string());
  const int status = std::system(command.c_str());
  const int code = status == -1 ? -1 : (WIFEXITED(status) ? WEXITSTATUS(status) : -1);
  if (code != 0) {
    throw AdapterError(fmt::format("adapter exited with status {} at outer epoch {}",
                                   code, epoch));
  }

  const auto deadline = std::chrono::steady_clock::now() + config.descriptor_timeout;
  for (;;) {
    if (fs::exists(descriptor)) {
      try {
        const json d = json::parse(io::read_file(descriptor));
        AdapterOutcome out;
        out.endpoint = d.at("endpoint").get<std::string>();
        if (d.contains("outer_epoch") && d["outer_epoch"].get<std::int64_t>() != epoch) {
          throw AdapterError(fmt::format("descriptor is for outer epoch {}, expected {}",
                                         d["outer_epoch"].get<std::int64_t>(), epoch));
        }
        if (d.contains("final_training_loss") && d["final_training_loss"].is_number()) {
          out.training_loss = d["final_training_loss"].get<double>();
        }
        return out;
      } catch (const json::exception&) {
        // Possibly still being written; retry until the deadline.
      }
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw AdapterError(fmt::format("no usable descriptor at {} for outer epoch {}",
                                     descriptor.string(), epoch));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

std::vector<PairSample> select_samples(const std::vector<PairSample>& all,
                                       const std::vector<RenderedExample>& examples) {
  std::map<std::string_view, const PairSample*> by_id;
  for (const auto& s : all) by_id.emplace(s.sample_id, &s);
  std::vector<PairSample> out;
  for (const auto& ex : examples) {
    const auto it = by_id.find(ex.sample_id);
    if (it == by_id.end()) {
      throw IntegrityError(fmt::format("test example {} is not in pairs.jsonl",
                                       ex.sample_id));
    }
    out.push_back(*it->second);
  }
  return out;
}

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
  io::write_file(run_dir / kManifestFile, manifest_json(m).dump(2) + "\n");
}

}  // namespace

std::size_t default_test_size(PromptVariant variant) {
  return variant == PromptVariant::kNormAcc ? 10 : 30;
}

void RunConfig::validate() const {
  if (outer_epochs < 1) throw RangeError("outer_epochs must be >= 1");
  if (corpus.reference_epoch < 0) throw RangeError("reference_epoch must be >= 0");
  if (adapter_command && adapter_command->empty()) {
    throw RangeError("adapter command is empty");
  }
  if (output_dir.empty()) throw RangeError("output directory is required");
  if (hyper.inner_epochs < 1) throw RangeError("inner_epochs must be >= 1");
  backend.validate();
}

std::string corpus_digest(const fs::path& corpus_dir) {
  Sha256 h;
  for (const auto name : {kArchitecturesFile, kDatasetsFile, kAccuraciesFile}) {
    const auto bytes = io::read_file(corpus_dir / std::string(name));
    h.update(name);
    h.update(std::string_view("\0", 1));
    h.update(fmt::format("{}", bytes.size()));
    h.update(std::string_view("\0", 1));
    h.update(bytes);
  }
  return h.hex();
}

json manifest_json(const RunManifest& m) {
  json epochs = json::array();
  for (const auto& e : m.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"status", e.status},
                      {"report", e.report_path},
                      {"error_count", e.error_count},
                      {"backend_id", e.backend_id},
                      {"training_loss",
                       e.training_loss ? json(*e.training_loss) : json(nullptr)}});
  }
  return json{{"run_id", m.run_id},
              {"status", m.status},
              {"abort_reason", m.abort_reason},
              {"template_version", m.template_version},
              {"corpus_digest", m.corpus_digest},
              {"config", m.config},
              {"epochs", epochs},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at}};
}

RunManifest parse_manifest(const json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.abort_reason = j.value("abort_reason", std::string{});
    m.template_version = j.at("template_version").get<std::string>();
    m.corpus_digest = j.at("corpus_digest").get<std::string>();
    m.config = j.at("config");
    m.started_at = j.value("started_at", std::string{});
    m.finished_at = j.value("finished_at", std::string{});
    for (const auto& e : j.at("epochs")) {
      EpochEntry entry;
      entry.epoch = e.at("epoch").get<std::int64_t>();
      entry.status = e.at("status").get<std::string>();
      entry.report_path = e.at("report").get<std::string>();
      entry.error_count = e.value("error_count", std::size_t{0});
      entry.backend_id = e.value("backend_id", std::string{});
      if (e.contains("training_loss") && e["training_loss"].is_number()) {
        entry.training_loss = e["training_loss"].get<double>();
      }
      m.epochs.push_back(std::move(entry));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad manifest: {}", e.what()));
  }
}

RunManifest read_manifest(const fs::path& run_dir) {
  const auto path = run_dir / kManifestFile;
  if (!fs::exists(path)) {
    throw NotFoundError(fmt::format("no run manifest at {}", path.string()));
  }
  try {
    return parse_manifest(json::parse(io::read_file(path)));
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

EpochReport score_logged(const std::vector<LoggedResponse>& entries,
                         const std::vector<PairSample>& test_samples,
                         const Corpus& corpus, std::int64_t epoch,
                         Attribution attribution) {
  std::map<std::string_view, const PairSample*> by_id;
  for (const auto& s : test_samples) by_id.emplace(s.sample_id, &s);
  std::vector<Prediction> predictions;
  for (const auto& e : entries) {
    if (!e.raw_text) continue;
    const auto it = by_id.find(e.sample_id);
    if (it == by_id.end()) {
      throw IntegrityError(
          fmt::format("response for unknown sample \"{}\"", e.sample_id));
    }
    predictions.push_back(judge(*it->second, *e.raw_text, corpus));
  }
  return score_epoch(predictions, test_samples, epoch, attribution);
}

void write_reports(const fs::path& dir, const std::vector<EpochReport>& reports,
                   const Corpus& corpus) {
  fs::create_directories(dir);
  for (const auto& r : reports) {
    io::write_file(dir / epoch_report_name(r.epoch), epoch_report_json(r, corpus));
  }
  emit_curve(reports, corpus, dir / "curve.csv");
  emit_per_dataset(reports, corpus, dir / "per_dataset.csv");
}

RunResult run(const RunConfig& config) {
  config.validate();
  const Corpus corpus = load_corpus(config.corpus_path, config.corpus);
  const std::string digest = corpus_digest(config.corpus_path);
  const TemplateSet templates = templates_for(config.template_dir);

  const auto norm = normalize(corpus, config.corpus);
  const auto pairs = generate_pairs(norm, corpus);
  const auto parts = split(pairs, effective_split(config.split, config.variant));
  if (parts.test.empty()) throw SizeError("the test split is empty");

  RunManifest manifest;
  manifest.config = config_json(config);
  manifest.corpus_digest = digest;
  manifest.template_version = templates.get(config.variant).version();
  manifest.run_id = config.run_id;
  if (manifest.run_id.empty()) {
    manifest.run_id = fmt::format("{}-{}", variant_name(config.variant).substr(0, 2),
                                  sha256_hex(manifest.config.dump() + digest).substr(0, 10));
  }

  // Built before touching the run directory: a replay backend may be reading
  // a log that lives there.
  auto backend = make_backend(config.backend, templates);

  RunResult result;
  result.run_dir = config.output_dir / manifest.run_id;
  const fs::path& run_dir = result.run_dir;
  fs::create_directories(run_dir);

  write_pairs(run_dir / kPairsFile, pairs);
  const fs::path train_path = run_dir / training_file_name(config.variant);
  const fs::path test_path = run_dir / test_file_name(config.variant);
  emit_training_set(parts.train, config.variant, corpus, train_path, templates,
                    config.render);
  emit_test_set(parts.test, config.variant, corpus, test_path, templates, config.render);
  const auto test_examples = read_rendered(test_path);

  const fs::path log_path = run_dir / response_log_name(manifest.run_id);
  io::write_file(log_path, "");

  manifest.status = "running";
  manifest.started_at = now_utc();
  write_manifest(run_dir, manifest);

  std::vector<CompletionRequest> requests;
  requests.reserve(test_examples.size());
  for (const auto& ex : test_examples) {
    requests.push_back({ex.input_text, ex.max_new_tokens, ex.sample_id, 0});
  }

  bool all_ok = true;
  for (std::int64_t epoch = 0; epoch <= config.outer_epochs; ++epoch) {
    EpochEntry entry;
    entry.epoch = epoch;
    if (epoch > 0 && config.adapter_command) {
      AdapterOutcome adapter;
      try {
        adapter = run_adapter(config, run_dir, epoch, train_path);
      } catch (const Error& e) {
        manifest.status = "aborted";
        manifest.abort_reason = e.what();
        entry.status = "failed";
        manifest.epochs.push_back(entry);
        all_ok = false;
        break;
      }
      entry.training_loss = adapter.training_loss;
      BackendDescriptor remote;
      remote.kind = BackendKind::kRemote;
      remote.endpoint = adapter.endpoint;
      if (config.backend.kind == BackendKind::kRemote) {
        remote.retry = config.backend.retry;
        remote.max_in_flight = config.backend.max_in_flight;
        remote.auth_token = config.backend.auth_token;
      }
      backend = make_backend(remote, templates);
    }
    entry.backend_id = backend->id();

    for (auto& r : requests) r.epoch = epoch;
    const auto outcomes = complete_all(*backend, requests);
    std::vector<LoggedResponse> logged;
    logged.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      LoggedResponse l;
      l.epoch = epoch;
      l.sample_id = requests[i].sample_id;
      if (outcomes[i].response) {
        l.raw_text = outcomes[i].response->raw_text;
        l.backend_id = outcomes[i].response->backend_id;
        l.latency_ms = outcomes[i].response->latency_ms;
      } else {
        l.error = outcomes[i].error;
        l.backend_id = backend->id();
      }
      logged.push_back(std::move(l));
    }
    append_response_log(log_path, logged);

    auto report =
        score_logged(logged, parts.test, corpus, epoch, config.attribution);
    entry.error_count = report.error_count;
    entry.report_path = epoch_report_name(epoch);
    const bool failed = report.total == 0;
    entry.status = failed ? "failed" : "ok";
    result.reports.push_back(std::move(report));
    manifest.epochs.push_back(entry);
    write_reports(run_dir, result.reports, corpus);
    write_manifest(run_dir, manifest);

    if (failed) {
      all_ok = false;
      if (config.abort_on_backend_failure) {
        manifest.status = "aborted";
        manifest.abort_reason =
            fmt::format("every request failed at epoch {}", epoch);
        break;
      }
    }
  }

  if (manifest.status == "running") manifest.status = "complete";
  manifest.finished_at = now_utc();
  write_manifest(run_dir, manifest);
  result.manifest = std::move(manifest);
  result.all_epochs_evaluated = all_ok;
  return result;
}

BuildCounts build(const BuildConfig& config) {
  const Corpus corpus = load_corpus(config.corpus_path, config.corpus);
  const TemplateSet templates = templates_for(config.template_dir);
  const auto pairs = generate_pairs(normalize(corpus, config.corpus), corpus);
  fs::create_directories(config.output_dir);
  write_pairs(config.output_dir / kPairsFile, pairs);

  BuildCounts counts;
  counts.pairs = pairs.size();
  for (const auto v : config.variants) {
    const auto parts = split(pairs, effective_split(config.split, v));
    const auto train = emit_training_set(parts.train, v, corpus,
                                         config.output_dir / training_file_name(v),
                                         templates, config.render);
    const auto test = emit_test_set(parts.test, v, corpus,
                                    config.output_dir / test_file_name(v), templates,
                                    config.render);
    counts.train_test[v] = {train, test};
  }
  return counts;
}

std::vector<EpochReport> rescore(const fs::path& run_dir, const fs::path& response_log,
                                 const fs::path& out_dir) {
  const RunManifest manifest = read_manifest(run_dir);
  const auto& cfg = manifest.config;
  const fs::path corpus_path = cfg.at("corpus_path").get<std::string>();
  if (corpus_digest(corpus_path) != manifest.corpus_digest) {
    throw IntegrityError(fmt::format("corpus at {} changed since run {}",
                                     corpus_path.string(), manifest.run_id));
  }
  CorpusConfig corpus_cfg;
  corpus_cfg.reference_epoch = cfg.at("reference_epoch").get<std::int64_t>();
  const Corpus corpus = load_corpus(corpus_path, corpus_cfg);
  const auto variant = parse_variant(cfg.at("variant").get<std::string>());
  const auto attribution = parse_attribution(cfg.at("attribution").get<std::string>());

  const auto pairs = read_pairs(run_dir / kPairsFile);
  const auto test = select_samples(pairs, read_rendered(run_dir / test_file_name(variant)));

  std::map<std::int64_t, std::vector<LoggedResponse>> by_epoch;
  for (auto& e : read_response_log(response_log)) {
    by_epoch[e.epoch].push_back(std::move(e));
  }
  std::vector<EpochReport> reports;
  for (const auto& [epoch, entries] : by_epoch) {
    reports.push_back(score_logged(entries, test, corpus, epoch, attribution));
  }
  write_reports(out_dir, reports, corpus);
  return reports;
}

Summary summarize(const std::vector<EpochReport>& reports) {
  Summary s;
  s.run_length = reports.size();
  const EpochReport* best = nullptr;
  for (const auto& r : reports) {
    if (r.total == 0) continue;
    // Exact rational comparison: correct/total vs best.
    if (best == nullptr || r.correct * best->total > best->correct * r.total) {
      best = &r;
      s.peak_epochs = {r.epoch};
    } else if (r.correct * best->total == best->correct * r.total) {
      s.peak_epochs.push_back(r.epoch);
    }
  }
  if (best != nullptr) s.peak = best->accuracy();
  return s;
}

std::string format_summary(const Summary& summary) {
  if (!summary.peak) {
    return fmt::format("no evaluated epochs, run {}", summary.run_length);
  }
  return fmt::format("peak {:.1f}% @ epoch{} {}, run {}", *summary.peak * 100.0,
                     summary.peak_epochs.size() > 1 ? "s" : "",
                     fmt::join(summary.peak_epochs, ", "), summary.run_length);
}

std::string report(const fs::path& root, const std::string& run_id) {
  const fs::path run_dir = root / run_id;
  const RunManifest manifest = read_manifest(run_dir);
  std::vector<EpochReport> reports;
  std::map<DatasetId, std::string> names;
  for (const auto& e : manifest.epochs) {
    if (e.report_path.empty()) continue;
    const auto text = io::read_file(run_dir / e.report_path);
    reports.push_back(parse_epoch_report(text));
    for (const auto& d : json::parse(text).at("per_dataset")) {
      names[DatasetId{d.at("dataset_id").get<std::int64_t>()}] =
          d.at("dataset").get<std::string>();
    }
  }

  std::string out = fmt::format("run {} ({}, {})\n", manifest.run_id,
                                manifest.template_version, manifest.status);
  out += format_summary(summarize(reports)) + "\n";
  const auto totals = aggregate_per_dataset(reports);
  if (!totals.empty()) {
    std::size_t width = 7;
    for (const auto& [id, _] : totals) width = std::max(width, names[id].size());
    out += fmt::format("\n{:<{}}  {:>10}  {:>7}  {:>8}\n", "dataset", width,
                       "attributed", "correct", "accuracy");
    for (const auto& [id, t] : totals) {
      const auto acc = t.accuracy();
      out += fmt::format("{:<{}}  {:>10}  {:>7}  {:>8}\n", names[id], width,
                         t.attributed, t.correct,
                         acc ? fmt::format("{:.1f}%", *acc * 100.0) : "-");
    }
  }
  return out;
}

}  // namespace crossds
