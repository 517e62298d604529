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

// Command-line entry point: build, run, score, report, synth.

#include <fmt/format.h>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crossds/errors.hpp"
#include "crossds/orchestrator.hpp"
#include "crossds/synthetic.hpp"

namespace {

using namespace crossds;

struct SplitFlags {
  std::uint64_t seed = 0;
  std::optional<std::size_t> test_size;
  std::optional<double> test_fraction;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Split seed")->capture_default_str();
    auto* size = cmd->add_option("--test-size", test_size, "Number of test samples");
    cmd->add_option("--test-fraction", test_fraction,
                    "Fraction of samples in the test split (rounded down)")
        ->excludes(size);
  }
  SplitSpec spec() const { return {seed, test_fraction, test_size}; }
};

struct RenderFlags {
  std::size_t code_limit = kCodeCharLimit;
  bool randomize_order = false;
  std::uint64_t order_seed = 0;
  std::optional<std::string> template_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--code-limit", code_limit, "Code truncation in characters")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--randomize-order", randomize_order,
                  "Present the two datasets in seeded random order");
    cmd->add_option("--order-seed", order_seed, "Seed for --randomize-order");
    cmd->add_option("--templates", template_dir, "Directory of .tmpl files");
  }
  RenderOptions options() const { return {code_limit, randomize_order, order_seed}; }
};

int run_command(CLI::App& app, int argc, char** argv) {
  app.require_subcommand(1);

  // build
  auto* build_cmd = app.add_subcommand("build", "Corpus -> pairs -> rendered prompt sets");
  std::string build_corpus, build_out;
  std::vector<std::string> build_variants;
  std::int64_t build_ref_epoch = 5;
  SplitFlags build_split;
  RenderFlags build_render;
  build_cmd->add_option("--corpus", build_corpus, "Corpus directory")->required();
  build_cmd->add_option("--out", build_out, "Output directory")->required();
  build_cmd->add_option("--variant", build_variants, "v1, v2, v3 (default: all)");
  build_cmd->add_option("--reference-epoch", build_ref_epoch)->capture_default_str();
  build_split.attach(build_cmd);
  build_render.attach(build_cmd);

  // run
  auto* run_cmd = app.add_subcommand("run", "Evaluate a backend over outer epochs");
  RunConfig rc;
  std::string variant = "v3", backend = "rule_v1", corpus, out, attribution = "both";
  std::optional<std::string> adapter_cmd;
  SplitFlags run_split;
  RenderFlags run_render;
  std::size_t max_in_flight = 0;
  int retries = 3;
  long backoff_ms = 1000, timeout_ms = 120000, descriptor_timeout_ms = 600000;
  run_cmd->add_option("--corpus", corpus, "Corpus directory")->required();
  run_cmd->add_option("--variant", variant, "v1, v2 or v3")->capture_default_str();
  run_cmd->add_option("--backend", backend,
                      "rule_v1 | constant:<answer> | remote:<url> | replay:<log>")
      ->capture_default_str();
  run_cmd->add_option("--epochs", rc.outer_epochs, "Outer epochs after epoch 0")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--adapter-cmd", adapter_cmd,
                      "Fine-tuning command; called with the control.json path");
  run_cmd->add_option("--out", out, "Output root")->required();
  run_cmd->add_option("--run-id", rc.run_id, "Run id (default: derived)");
  run_cmd->add_option("--reference-epoch", rc.corpus.reference_epoch)
      ->capture_default_str();
  run_cmd->add_option("--attribution", attribution, "both | label | predicted")
      ->capture_default_str();
  run_cmd->add_option("--max-in-flight", max_in_flight,
                      "Concurrent requests for remote backends");
  run_cmd->add_option("--retries", retries, "Attempts per remote request")
      ->capture_default_str();
  run_cmd->add_option("--backoff-ms", backoff_ms, "Initial retry backoff")
      ->capture_default_str();
  run_cmd->add_option("--timeout-ms", timeout_ms, "Remote request timeout")
      ->capture_default_str();
  run_cmd->add_option("--descriptor-timeout-ms", descriptor_timeout_ms,
                      "How long to wait for the adapter's descriptor.json")
      ->capture_default_str();
  run_cmd->add_flag("--abort-on-backend-failure", rc.abort_on_backend_failure,
                    "Stop the run when every request of an epoch fails");
  run_cmd->add_option("--inner-epochs", rc.hyper.inner_epochs)->capture_default_str();
  run_cmd->add_option("--lora-rank", rc.hyper.lora_rank)->capture_default_str();
  run_cmd->add_option("--lora-alpha", rc.hyper.lora_alpha)->capture_default_str();
  run_cmd->add_option("--lora-dropout", rc.hyper.lora_dropout)->capture_default_str();
  run_cmd->add_option("--scheduler", rc.hyper.scheduler)->capture_default_str();
  run_cmd->add_option("--base-model", rc.hyper.base_model_id);
  run_split.attach(run_cmd);
  run_render.attach(run_cmd);

  // score
  auto* score_cmd = app.add_subcommand("score", "Re-score a recorded response log");
  std::string score_run, score_log, score_out;
  score_cmd->add_option("--run", score_run, "Run directory")->required();
  score_cmd->add_option("--log", score_log, "Response log (default: the run's own)");
  score_cmd->add_option("--out", score_out, "Output directory (default: <run>/rescore)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarize a run");
  std::string report_run_id, report_root;
  report_cmd->add_option("run_id", report_run_id, "Run id")->required();
  report_cmd->add_option("--out", report_root, "Output root the run lives in")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a random demo corpus");
  SyntheticSpec synth;
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out, "Corpus directory")->required();
  synth_cmd->add_option("--models", synth.models)->capture_default_str();
  synth_cmd->add_option("--datasets", synth.datasets)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*build_cmd) {
    BuildConfig bc;
    bc.corpus_path = build_corpus;
    bc.corpus.reference_epoch = build_ref_epoch;
    bc.output_dir = build_out;
    bc.split = build_split.spec();
    bc.render = build_render.options();
    if (build_render.template_dir) bc.template_dir = *build_render.template_dir;
    if (!build_variants.empty()) {
      bc.variants.clear();
      for (const auto& v : build_variants) bc.variants.push_back(parse_variant(v));
    }
    const auto counts = build(bc);
    fmt::print("{} pairs\n", counts.pairs);
    for (const auto& [v, tt] : counts.train_test) {
      fmt::print("{}: {} train, {} test\n", variant_name(v), tt.first, tt.second);
    }
    return 0;
  }

  if (*run_cmd) {
    rc.variant = parse_variant(variant);
    rc.corpus_path = corpus;
    rc.output_dir = out;
    rc.split = run_split.spec();
    rc.render = run_render.options();
    if (run_render.template_dir) rc.template_dir = *run_render.template_dir;
    rc.attribution = parse_attribution(attribution);
    rc.backend = BackendDescriptor::parse(backend);
    rc.backend.retry.attempts = retries;
    rc.backend.retry.initial_backoff = std::chrono::milliseconds(backoff_ms);
    rc.backend.retry.timeout = std::chrono::milliseconds(timeout_ms);
    if (max_in_flight > 0) rc.backend.max_in_flight = max_in_flight;
    rc.adapter_command = adapter_cmd;
    rc.descriptor_timeout = std::chrono::milliseconds(descriptor_timeout_ms);
    const auto result = run(rc);
    fmt::print("run {} -> {}\n", result.manifest.run_id, result.run_dir.string());
    fmt::print("{}\n", format_summary(summarize(result.reports)));
    if (!result.manifest.abort_reason.empty()) {
      fmt::print(stderr, "aborted: {}\n", result.manifest.abort_reason);
    }
    return result.all_epochs_evaluated ? 0 : 1;
  }

  if (*score_cmd) {
    const std::filesystem::path run_dir = score_run;
    std::filesystem::path log = score_log;
    if (log.empty()) log = run_dir / response_log_name(read_manifest(run_dir).run_id);
    const std::filesystem::path dest = score_out.empty() ? run_dir / "rescore"
                                                         : std::filesystem::path(score_out);
    const auto reports = rescore(run_dir, log, dest);
    fmt::print("{} epochs scored -> {}\n", reports.size(), dest.string());
    fmt::print("{}\n", format_summary(summarize(reports)));
    return 0;
  }

  if (*report_cmd) {
    fmt::print("{}", report(report_root, report_run_id));
    return 0;
  }

  if (*synth_cmd) {
    save_corpus(make_synthetic_corpus(synth), synth_out);
    fmt::print("wrote {} models x {} datasets to {}\n", synth.models, synth.datasets,
               synth_out);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossds: pairwise cross-dataset performance classification harness"};
  try {
    return run_command(app, argc, argv);
  } catch (const crossds::NotFoundError& e) {
    std::cerr << "not found: " << e.what() << '\n';
    return 3;
  } catch (const crossds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
