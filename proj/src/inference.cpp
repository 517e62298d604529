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

#include "crossds/inference.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "crossds/errors.hpp"
#include "crossds/text.hpp"
#include "httplib.h"
#include "io.hpp"

namespace crossds {
namespace {

using io::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_request(const CompletionRequest& request) {
  if (request.max_new_tokens < 1) {
    throw RangeError(
        fmt::format("max_new_tokens must be >= 1, got {}", request.max_new_tokens));
  }
}

class RuleV1Backend final : public Backend {
 public:
  explicit RuleV1Backend(const TemplateSet& templates) : templates_(templates) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    check_request(request);
    const auto start = Clock::now();
    auto answer = rule_v1_answer(request.input_text, templates_);
    return {std::move(answer), id(), elapsed_ms(start)};
  }
  std::string id() const override { return "rule_v1"; }
  std::size_t max_in_flight() const override {
    return std::max(1u, std::thread::hardware_concurrency());
  }

 private:
  const TemplateSet& templates_;
};

class ConstantBackend final : public Backend {
 public:
  explicit ConstantBackend(std::string answer) : answer_(std::move(answer)) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    check_request(request);
    return {answer_, id(), 0.0};
  }
  std::string id() const override { return fmt::format("constant:{}", answer_); }
  std::size_t max_in_flight() const override { return 64; }

 private:
  std::string answer_;
};

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) {
    throw RangeError(fmt::format("endpoint \"{}\" lacks a scheme", url));
  }
  if (url.substr(0, scheme) != "http") {
    throw RangeError(fmt::format("endpoint \"{}\": only http is supported", url));
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(const BackendDescriptor& d)
      : endpoint_(split_endpoint(d.endpoint)),
        url_(d.endpoint),
        retry_(d.retry),
        max_in_flight_(std::max<std::size_t>(1, d.max_in_flight)),
        token_(d.auth_token) {
    if (token_.empty()) {
      if (const char* env = std::getenv(kAuthTokenEnv)) token_ = env;
    }
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    check_request(request);
    const std::string body = json{{"prompt", request.input_text},
                                  {"max_tokens", request.max_new_tokens},
                                  {"temperature", 0}}
                                 .dump(-1, ' ', false, json::error_handler_t::replace);
    auto backoff = retry_.initial_backoff;
    const int attempts = std::max(1, retry_.attempts);
    for (int attempt = 1;; ++attempt) {
      const auto start = Clock::now();
      try {
        auto text = post_once(body);
        return {std::move(text), id(), elapsed_ms(start)};
      } catch (const TransportError& e) {
        if (attempt >= attempts) {
          throw TransportError(fmt::format("{} (after {} attempts)", e.what(), attempts));
        }
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }

  std::string id() const override { return fmt::format("remote:{}", url_); }
  std::size_t max_in_flight() const override { return max_in_flight_; }

 private:
  std::string post_once(const std::string& body) const {
    // httplib clients are not safe to share across threads; one per call.
    httplib::Client client(endpoint_.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(retry_.timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(
                          retry_.timeout - secs)
                          .count();
    client.set_connection_timeout(secs.count(), usec);
    client.set_read_timeout(secs.count(), usec);
    client.set_write_timeout(secs.count(), usec);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    const auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) {
      throw TransportError(fmt::format("POST {} failed: {}", url_,
                                       httplib::to_string(res.error())));
    }
    if (res->status >= 500 || res->status == 429) {
      throw TransportError(fmt::format("POST {} returned HTTP {}", url_, res->status));
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError(fmt::format("POST {} returned HTTP {}", url_, res->status));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ProtocolError(fmt::format("reply from {} is not JSON", url_));
    }
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
      throw ProtocolError(fmt::format("reply from {} lacks a string \"text\"", url_));
    }
    return reply["text"].get<std::string>();
  }

  Endpoint endpoint_;
  std::string url_;
  RetryPolicy retry_;
  std::size_t max_in_flight_;
  std::string token_;
};

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& log) : path_(log) {
    for (auto& entry : read_response_log(log)) {
      auto key = std::pair{entry.epoch, entry.sample_id};
      if (!recorded_.emplace(std::move(key), std::move(entry)).second) {
        throw IntegrityError(fmt::format("{} has two responses for one sample/epoch",
                                         log.string()));
      }
    }
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    check_request(request);
    const auto it = recorded_.find(std::pair{request.epoch, request.sample_id});
    if (it == recorded_.end()) {
      throw NotFoundError(fmt::format("no recorded response for {} at epoch {}",
                                      request.sample_id, request.epoch));
    }
    const auto& e = it->second;
    if (!e.raw_text) throw TransportError(e.error);
    return {*e.raw_text, e.backend_id, e.latency_ms};
  }
  std::string id() const override { return fmt::format("replay:{}", path_.string()); }
  std::size_t max_in_flight() const override { return 64; }

 private:
  std::filesystem::path path_;
  std::map<std::pair<std::int64_t, std::string>, LoggedResponse> recorded_;
};

std::string_view kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kRuleV1:
      return "rule_v1";
    case BackendKind::kConstant:
      return "constant";
    case BackendKind::kRemote:
      return "remote";
    case BackendKind::kReplay:
      return "replay";
  }
  return "unknown";
}

}  // namespace

void BackendDescriptor::validate() const {
  const auto need = [&](bool present, std::string_view field, bool wanted) {
    if (present != wanted) {
      throw RangeError(fmt::format("{} backend {} {}", kind_name(kind),
                                   wanted ? "requires" : "does not take", field));
    }
  };
  need(!endpoint.empty(), "an endpoint", kind == BackendKind::kRemote);
  need(!constant_answer.empty(), "a constant answer", kind == BackendKind::kConstant);
  need(!replay_log.empty(), "a replay log", kind == BackendKind::kReplay);
  if (retry.attempts < 1) throw RangeError("retry attempts must be >= 1");
}

BackendDescriptor BackendDescriptor::parse(std::string_view spec) {
  BackendDescriptor d;
  const auto colon = spec.find(':');
  const auto kind = spec.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{}
                                                   : spec.substr(colon + 1);
  if (kind == "rule_v1") {
    d.kind = BackendKind::kRuleV1;
  } else if (kind == "constant") {
    d.kind = BackendKind::kConstant;
    d.constant_answer = std::string(arg);
  } else if (kind == "remote") {
    d.kind = BackendKind::kRemote;
    d.endpoint = std::string(arg);
    d.max_in_flight = 4;
  } else if (kind == "replay") {
    d.kind = BackendKind::kReplay;
    d.replay_log = std::string(arg);
  } else {
    throw ParseError(fmt::format("unknown backend \"{}\"", spec));
  }
  if (d.kind == BackendKind::kRuleV1 && !arg.empty()) {
    throw ParseError("rule_v1 backend takes no argument");
  }
  d.validate();
  return d;
}

std::string BackendDescriptor::to_string() const {
  switch (kind) {
    case BackendKind::kRuleV1:
      return "rule_v1";
    case BackendKind::kConstant:
      return fmt::format("constant:{}", constant_answer);
    case BackendKind::kRemote:
      return fmt::format("remote:{}", endpoint);
    case BackendKind::kReplay:
      return fmt::format("replay:{}", replay_log.string());
  }
  return "unknown";
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor,
                                      const TemplateSet& templates) {
  descriptor.validate();
  switch (descriptor.kind) {
    case BackendKind::kRuleV1:
      return std::make_unique<RuleV1Backend>(templates);
    case BackendKind::kConstant:
      return std::make_unique<ConstantBackend>(descriptor.constant_answer);
    case BackendKind::kRemote:
      return std::make_unique<RemoteBackend>(descriptor);
    case BackendKind::kReplay:
      return std::make_unique<ReplayBackend>(descriptor.replay_log);
  }
  throw RangeError("unknown backend kind");
}

CompletionResponse complete(const BackendDescriptor& descriptor,
                            const CompletionRequest& request) {
  return make_backend(descriptor)->complete(request);
}

std::string rule_v1_answer(std::string_view input_text, const TemplateSet& templates) {
  const auto fields =
      parse_norm_acc_prompt(input_text, templates.get(PromptVariant::kNormAcc));
  const int c = compare_decimal(fields.acc_a, fields.acc_b);
  if (c == 0) {
    throw AmbiguityError(fmt::format("\"{}\" and \"{}\" have equal accuracy {}",
                                     fields.name_a, fields.name_b, fields.acc_a));
  }
  return c > 0 ? fields.name_a : fields.name_b;
}

std::vector<CompletionOutcome> complete_all(Backend& backend,
                                            std::span<const CompletionRequest> requests) {
  std::vector<CompletionOutcome> results(requests.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      try {
        results[i].response = backend.complete(requests[i]);
      } catch (const std::exception& e) {
        results[i].error = e.what();
        if (results[i].error.empty()) results[i].error = "unknown error";
      }
    }
  };
  const std::size_t workers =
      std::min(std::max<std::size_t>(1, backend.max_in_flight()), requests.size());
  if (workers <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

std::string response_log_name(std::string_view run_id) {
  return fmt::format("responses_{}.jsonl", run_id);
}

void append_response_log(const std::filesystem::path& path,
                         std::span<const LoggedResponse> entries) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw WriteError(fmt::format("cannot append to {}", path.string()));
  for (const auto& e : entries) {
    json j{{"epoch", e.epoch}, {"sample_id", e.sample_id}, {"backend_id", e.backend_id},
           {"latency_ms", e.latency_ms}};
    if (e.raw_text) {
      j["raw_text"] = *e.raw_text;
    } else {
      j["error"] = e.error;
    }
    out << io::dump_line(j) << '\n';
  }
  if (!out) throw WriteError(fmt::format("write failed: {}", path.string()));
}

std::vector<LoggedResponse> read_response_log(const std::filesystem::path& path) {
  std::vector<LoggedResponse> out;
  io::for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    LoggedResponse e;
    e.epoch = obj.at("epoch").get<std::int64_t>();
    e.sample_id = obj.at("sample_id").get<std::string>();
    e.backend_id = obj.value("backend_id", std::string{});
    e.latency_ms = obj.value("latency_ms", 0.0);
    if (obj.contains("raw_text")) {
      e.raw_text = obj.at("raw_text").get<std::string>();
    } else if (obj.contains("error")) {
      e.error = obj.at("error").get<std::string>();
    } else {
      throw ParseError(fmt::format("{}:{}: entry has neither raw_text nor error",
                                   path.filename().string(), line));
    }
    out.push_back(std::move(e));
  });
  return out;
}

}  // namespace crossds
