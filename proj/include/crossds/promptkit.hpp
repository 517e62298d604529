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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossds/corpus.hpp"
#include "crossds/pairgen.hpp"

namespace crossds {

enum class PromptVariant { kNormAcc, kMetadata, kCodeOnly };

inline constexpr std::array<PromptVariant, 3> kAllVariants = {
    PromptVariant::kNormAcc, PromptVariant::kMetadata, PromptVariant::kCodeOnly};

// "v1_norm_acc", "v2_metadata", "v3_code_only".
std::string_view variant_name(PromptVariant v);
// Accepts the full names above and the short forms "v1", "v2", "v3".
PromptVariant parse_variant(std::string_view text);

inline constexpr std::size_t kCodeCharLimit = 2000;
inline constexpr int kMaxNewTokens = 20;
inline constexpr int kAccuracyPlaces = 4;

// First `limit` characters (Unicode code points of UTF-8 input) of
// `source_code`. Shorter input is returned unchanged.
std::string truncate_code(std::string_view source_code,
                          std::size_t limit = kCodeCharLimit);

// A prompt template: header lines "## key: value" followed by a body with
// {{placeholder}} slots. Placeholders are substituted in a single pass, so
// substituted text is never re-expanded.
class PromptTemplate {
 public:
  static PromptTemplate parse(std::string_view text);

  PromptVariant variant() const { return variant_; }
  // "<variant>@<version>", stamped on every rendered example.
  const std::string& version() const { return version_; }
  const std::string& body() const { return body_; }

  std::string expand(const std::map<std::string, std::string, std::less<>>& values) const;

 private:
  PromptVariant variant_{};
  std::string version_;
  std::string body_;
};

class TemplateSet {
 public:
  // Templates compiled in from templates/*.tmpl.
  static const TemplateSet& builtin();
  // Reads v1_norm_acc.tmpl, v2_metadata.tmpl and v3_code_only.tmpl from dir.
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& get(PromptVariant v) const;

 private:
  std::array<PromptTemplate, 3> templates_;
};

struct RenderOptions {
  std::size_t code_limit = kCodeCharLimit;
  // Present the two datasets in a seeded per-sample random order instead of
  // id order.
  bool randomize_order = false;
  std::uint64_t order_seed = 0;
};

struct RenderedExample {
  std::string sample_id;
  PromptVariant variant{};
  std::string input_text;
  std::string target_text;
  int max_new_tokens = kMaxNewTokens;
  std::string template_version;
};

RenderedExample render(const PairSample& sample, PromptVariant variant,
                       const Corpus& corpus,
                       const TemplateSet& templates = TemplateSet::builtin(),
                       const RenderOptions& options = {});

// The renderings of both normalized accuracies as they appear in a V1 prompt.
std::pair<std::string, std::string> accuracy_renderings(const PairSample& sample);

// Throws LeakageError if the example exposes its label: "better_dataset"
// anywhere, or either accuracy's decimal rendering in a V2/V3 prompt. Also
// requires both candidate names and the target to appear in the input.
void check_leakage(const RenderedExample& example, const PairSample& sample,
                   const Corpus& corpus);

// Renders and writes one JSON object per sample to `path`, each line carrying
// input_text, target_text, sample_id, variant and template_version. Test sets
// additionally carry max_new_tokens. Returns the number of lines written;
// a failure leaves no file behind.
std::size_t emit_training_set(const std::vector<PairSample>& samples,
                              PromptVariant variant, const Corpus& corpus,
                              const std::filesystem::path& path,
                              const TemplateSet& templates = TemplateSet::builtin(),
                              const RenderOptions& options = {});
std::size_t emit_test_set(const std::vector<PairSample>& samples,
                          PromptVariant variant, const Corpus& corpus,
                          const std::filesystem::path& path,
                          const TemplateSet& templates = TemplateSet::builtin(),
                          const RenderOptions& options = {});

std::vector<RenderedExample> read_rendered(const std::filesystem::path& path);

std::string training_file_name(PromptVariant v);  // train_<variant>.jsonl
std::string test_file_name(PromptVariant v);      // test_<variant>.jsonl

// Recovers the two (name, accuracy) fields of a prompt rendered from a V1
// template by aligning input lines with template lines: lines before the
// code slot from the top, lines after it from the bottom.
struct NormAccFields {
  std::string name_a;
  std::string acc_a;
  std::string name_b;
  std::string acc_b;
};
NormAccFields parse_norm_acc_prompt(std::string_view input_text,
                                    const PromptTemplate& v1_template);

}  // namespace crossds
