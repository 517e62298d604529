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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crossds/promptkit.hpp"

namespace crossds {

// Decoding is always greedy (temperature 0); there is no knob for it.
struct CompletionRequest {
  std::string input_text;
  int max_new_tokens = kMaxNewTokens;
  // Routing keys for logging and replay; never sent to a remote backend.
  std::string sample_id;
  std::int64_t epoch = 0;
};

struct CompletionResponse {
  std::string raw_text;
  std::string backend_id;
  double latency_ms = 0.0;
};

enum class BackendKind { kRuleV1, kConstant, kRemote, kReplay };

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds timeout{120000};
};

// Environment variable holding a bearer token for remote backends.
inline constexpr const char* kAuthTokenEnv = "CROSSDS_AUTH_TOKEN";

struct BackendDescriptor {
  BackendKind kind = BackendKind::kRuleV1;
  std::string endpoint;                // remote only, "http://host:port/path"
  std::string constant_answer;         // constant only
  std::filesystem::path replay_log;    // replay only
  RetryPolicy retry;
  std::size_t max_in_flight = 1;
  std::string auth_token;              // remote; falls back to kAuthTokenEnv

  // Throws RangeError when a kind-specific field is missing or set for the
  // wrong kind.
  void validate() const;

  // "rule_v1", "constant:<answer>", "remote:<url>", "replay:<log path>".
  static BackendDescriptor parse(std::string_view spec);
  std::string to_string() const;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
  // Upper bound on concurrent complete() calls.
  virtual std::size_t max_in_flight() const { return 1; }
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor,
                                      const TemplateSet& templates = TemplateSet::builtin());

// One-shot convenience over make_backend.
CompletionResponse complete(const BackendDescriptor& descriptor,
                            const CompletionRequest& request);

// Answers a V1 prompt by parsing both (name, accuracy) fields and returning
// the name whose accuracy is strictly larger. Comparison is exact on the
// decimal text. ParseError on a non-V1 prompt, AmbiguityError on equal values.
std::string rule_v1_answer(std::string_view input_text,
                           const TemplateSet& templates = TemplateSet::builtin());

struct CompletionOutcome {
  std::optional<CompletionResponse> response;
  std::string error;  // set iff !response
};

// Issues every request, at most backend.max_in_flight() at a time. Result i
// belongs to request i whatever order completions arrive in. Failures are
// captured per request, never thrown.
std::vector<CompletionOutcome> complete_all(Backend& backend,
                                            std::span<const CompletionRequest> requests);

// One line of responses_<run>.jsonl. Exactly one of raw_text / error is set.
struct LoggedResponse {
  std::int64_t epoch = 0;
  std::string sample_id;
  std::optional<std::string> raw_text;
  std::string error;
  std::string backend_id;
  double latency_ms = 0.0;
};

std::string response_log_name(std::string_view run_id);
void append_response_log(const std::filesystem::path& path,
                         std::span<const LoggedResponse> entries);
std::vector<LoggedResponse> read_response_log(const std::filesystem::path& path);

}  // namespace crossds
