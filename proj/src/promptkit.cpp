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

#include "crossds/promptkit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <random>
#include <set>

#include "crossds/errors.hpp"
#include "crossds/text.hpp"
#include "embedded_templates.hpp"
#include "io.hpp"

namespace crossds {
namespace {

using io::json;

constexpr std::string_view kLeakField = "better_dataset";

const std::set<std::string, std::less<>>& allowed_placeholders(PromptVariant v) {
  static const std::set<std::string, std::less<>> v1 = {"code", "name_a", "name_b",
                                                        "acc_a", "acc_b"};
  static const std::set<std::string, std::less<>> v2 = {
      "code",           "name_a",         "name_b",     "train_images_a",
      "train_images_b", "image_size_a",   "image_size_b", "channels_a",
      "channels_b",     "num_classes_a",  "num_classes_b"};
  static const std::set<std::string, std::less<>> v3 = {"code", "name_a", "name_b"};
  switch (v) {
    case PromptVariant::kNormAcc:
      return v1;
    case PromptVariant::kMetadata:
      return v2;
    case PromptVariant::kCodeOnly:
      return v3;
  }
  return v3;
}

// Template text split into literal runs and {{name}} slots.
struct Segment {
  bool placeholder = false;
  std::string text;
};

std::vector<Segment> tokenize(std::string_view body) {
  std::vector<Segment> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find("{{", pos);
    if (open == std::string_view::npos) {
      out.push_back({false, std::string(body.substr(pos))});
      break;
    }
    const auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw TemplateError("unterminated placeholder in template");
    }
    if (open > pos) out.push_back({false, std::string(body.substr(pos, open - pos))});
    out.push_back({true, std::string(body.substr(open + 2, close - open - 2))});
    pos = close + 2;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  for (;;) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      return lines;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
}

using Captures = std::map<std::string, std::string, std::less<>>;

// Matches one input line against one template line. Slots capture at least
// one character; acc_* slots must capture a decimal numeral.
bool match_line(const std::vector<Segment>& segs, std::size_t seg, std::string_view line,
                Captures& caps) {
  if (seg == segs.size()) return line.empty();
  const Segment& s = segs[seg];
  if (!s.placeholder) {
    if (line.substr(0, s.text.size()) != s.text) return false;
    return match_line(segs, seg + 1, line.substr(s.text.size()), caps);
  }
  const bool numeric = s.text.rfind("acc_", 0) == 0;
  for (std::size_t len = line.size(); len >= 1; --len) {
    const auto value = line.substr(0, len);
    if (numeric && !is_decimal_numeral(value)) continue;
    if (match_line(segs, seg + 1, line.substr(len), caps)) {
      caps[s.text] = std::string(value);
      return true;
    }
  }
  return false;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string image_size(const DatasetMeta& d) {
  return fmt::format("{}x{}", d.image_height, d.image_width);
}

json example_json(const RenderedExample& ex, bool with_tokens) {
  json j{{"input_text", ex.input_text},
         {"target_text", ex.target_text},
         {"sample_id", ex.sample_id},
         {"variant", std::string(variant_name(ex.variant))},
         {"template_version", ex.template_version}};
  if (with_tokens) j["max_new_tokens"] = ex.max_new_tokens;
  return j;
}

std::size_t emit(const std::vector<PairSample>& samples, PromptVariant variant,
                 const Corpus& corpus, const std::filesystem::path& path,
                 const TemplateSet& templates, const RenderOptions& options,
                 bool with_tokens) {
  io::AtomicFile out(path);
  std::size_t count = 0;
  for (const auto& s : samples) {
    const auto ex = render(s, variant, corpus, templates, options);
    check_leakage(ex, s, corpus);
    out.write(io::dump_line(example_json(ex, with_tokens)));
    out.write("\n");
    ++count;
  }
  out.commit();
  return count;
}

}  // namespace

std::string_view variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::kNormAcc:
      return "v1_norm_acc";
    case PromptVariant::kMetadata:
      return "v2_metadata";
    case PromptVariant::kCodeOnly:
      return "v3_code_only";
  }
  return "unknown";
}

PromptVariant parse_variant(std::string_view text) {
  for (const auto v : kAllVariants) {
    const auto name = variant_name(v);
    if (text == name || text == name.substr(0, 2)) return v;
  }
  throw ParseError(fmt::format("unknown prompt variant \"{}\"", text));
}

std::string truncate_code(std::string_view source_code, std::size_t limit) {
  std::size_t chars = 0;
  std::size_t pos = 0;
  while (pos < source_code.size() && chars < limit) {
    const auto lead = static_cast<unsigned char>(source_code[pos]);
    std::size_t width = 1;
    if (lead >= 0xF0) {
      width = 4;
    } else if (lead >= 0xE0) {
      width = 3;
    } else if (lead >= 0xC0) {
      width = 2;
    }
    pos = std::min(pos + width, source_code.size());
    ++chars;
  }
  return std::string(source_code.substr(0, pos));
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  std::optional<PromptVariant> variant;
  std::string version;
  std::size_t pos = 0;
  while (text.substr(pos, 3) == "## ") {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos + 3, nl == std::string_view::npos
                                               ? std::string_view::npos
                                               : nl - pos - 3);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw TemplateError(fmt::format("bad template header line \"{}\"", line));
    }
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    if (key == "variant") {
      variant = parse_variant(value);
    } else if (key == "version") {
      version = std::string(value);
    }
    if (nl == std::string_view::npos) {
      pos = text.size();
      break;
    }
    pos = nl + 1;
  }
  if (!variant) throw TemplateError("template header lacks \"variant\"");
  if (version.empty()) throw TemplateError("template header lacks \"version\"");
  t.variant_ = *variant;
  t.version_ = fmt::format("{}@{}", variant_name(*variant), version);
  t.body_ = std::string(text.substr(pos));
  if (!t.body_.empty() && t.body_.back() == '\n') t.body_.pop_back();

  if (t.body_.find(kLeakField) != std::string::npos) {
    throw TemplateError("template mentions the label field");
  }
  const auto& allowed = allowed_placeholders(t.variant_);
  std::set<std::string, std::less<>> seen;
  for (const auto& seg : tokenize(t.body_)) {
    if (!seg.placeholder) continue;
    if (!allowed.contains(seg.text)) {
      throw TemplateError(fmt::format("placeholder {{{{{}}}}} is not allowed in {}",
                                      seg.text, variant_name(t.variant_)));
    }
    seen.insert(seg.text);
  }
  for (const auto& name : allowed) {
    if (!seen.contains(name)) {
      throw TemplateError(fmt::format("{} template lacks {{{{{}}}}}",
                                      variant_name(t.variant_), name));
    }
  }
  return t;
}

std::string PromptTemplate::expand(
    const std::map<std::string, std::string, std::less<>>& values) const {
  std::string out;
  for (const auto& seg : tokenize(body_)) {
    if (!seg.placeholder) {
      out += seg.text;
      continue;
    }
    const auto it = values.find(seg.text);
    if (it == values.end()) {
      throw TemplateError(fmt::format("no value for {{{{{}}}}}", seg.text));
    }
    out += it->second;
  }
  return out;
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    TemplateSet s;
    s.templates_[0] = PromptTemplate::parse(embedded::kV1NormAcc);
    s.templates_[1] = PromptTemplate::parse(embedded::kV2Metadata);
    s.templates_[2] = PromptTemplate::parse(embedded::kV3CodeOnly);
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet s;
  for (std::size_t i = 0; i < kAllVariants.size(); ++i) {
    const auto v = kAllVariants[i];
    const auto path = dir / fmt::format("{}.tmpl", variant_name(v));
    s.templates_[i] = PromptTemplate::parse(io::read_file(path));
    if (s.templates_[i].variant() != v) {
      throw TemplateError(fmt::format("{} declares variant {}", path.string(),
                                      variant_name(s.templates_[i].variant())));
    }
  }
  return s;
}

const PromptTemplate& TemplateSet::get(PromptVariant v) const {
  return templates_[static_cast<std::size_t>(v)];
}

std::pair<std::string, std::string> accuracy_renderings(const PairSample& sample) {
  return format_distinct(sample.norm_acc_a, sample.norm_acc_b, kAccuracyPlaces);
}

RenderedExample render(const PairSample& sample, PromptVariant variant,
                       const Corpus& corpus, const TemplateSet& templates,
                       const RenderOptions& options) {
  const auto& arch = corpus.architecture(sample.model_id);
  const DatasetMeta* first = &corpus.dataset(sample.dataset_a);
  const DatasetMeta* second = &corpus.dataset(sample.dataset_b);
  const DatasetMeta& winner = corpus.dataset(sample.label);
  auto [acc_first, acc_second] = accuracy_renderings(sample);

  if (options.randomize_order) {
    std::mt19937_64 rng(options.order_seed ^ fnv1a(sample.sample_id));
    if (rng() & 1u) {
      std::swap(first, second);
      std::swap(acc_first, acc_second);
    }
  }

  const PromptTemplate& tmpl = templates.get(variant);
  Captures values{{"code", truncate_code(arch.source_code, options.code_limit)},
                  {"name_a", first->name},
                  {"name_b", second->name}};
  switch (variant) {
    case PromptVariant::kNormAcc:
      values["acc_a"] = acc_first;
      values["acc_b"] = acc_second;
      break;
    case PromptVariant::kMetadata:
      for (const auto& [suffix, d] : {std::pair{"_a", first}, std::pair{"_b", second}}) {
        values[fmt::format("train_images{}", suffix)] = std::to_string(d->train_images);
        values[fmt::format("image_size{}", suffix)] = image_size(*d);
        values[fmt::format("channels{}", suffix)] = std::to_string(d->channels);
        values[fmt::format("num_classes{}", suffix)] = std::to_string(d->num_classes);
      }
      break;
    case PromptVariant::kCodeOnly:
      break;
  }

  RenderedExample ex;
  ex.sample_id = sample.sample_id;
  ex.variant = variant;
  ex.input_text = tmpl.expand(values);
  ex.target_text = winner.name;
  ex.max_new_tokens = kMaxNewTokens;
  ex.template_version = tmpl.version();
  return ex;
}

void check_leakage(const RenderedExample& example, const PairSample& sample,
                   const Corpus& corpus) {
  const auto& input = example.input_text;
  if (input.find(kLeakField) != std::string::npos) {
    throw LeakageError(
        fmt::format("{}: input mentions \"{}\"", example.sample_id, kLeakField));
  }
  if (example.variant != PromptVariant::kNormAcc) {
    const auto [ra, rb] = accuracy_renderings(sample);
    for (const auto& r : {ra, rb, format_fixed(sample.norm_acc_a, kAccuracyPlaces),
                          format_fixed(sample.norm_acc_b, kAccuracyPlaces)}) {
      if (input.find(r) != std::string::npos) {
        throw LeakageError(fmt::format("{}: {} input contains accuracy {}",
                                       example.sample_id,
                                       variant_name(example.variant), r));
      }
    }
  }
  for (const auto id : {sample.dataset_a, sample.dataset_b}) {
    const auto& name = corpus.dataset(id).name;
    if (input.find(name) == std::string::npos) {
      throw LeakageError(fmt::format("{}: input lacks candidate \"{}\"",
                                     example.sample_id, name));
    }
  }
  if (input.find(example.target_text) == std::string::npos) {
    throw LeakageError(
        fmt::format("{}: target is not among the presented names", example.sample_id));
  }
}

std::size_t emit_training_set(const std::vector<PairSample>& samples,
                              PromptVariant variant, const Corpus& corpus,
                              const std::filesystem::path& path,
                              const TemplateSet& templates,
                              const RenderOptions& options) {
  return emit(samples, variant, corpus, path, templates, options, false);
}

std::size_t emit_test_set(const std::vector<PairSample>& samples,
                          PromptVariant variant, const Corpus& corpus,
                          const std::filesystem::path& path,
                          const TemplateSet& templates, const RenderOptions& options) {
  return emit(samples, variant, corpus, path, templates, options, true);
}

std::vector<RenderedExample> read_rendered(const std::filesystem::path& path) {
  std::vector<RenderedExample> out;
  io::for_each_jsonl(path, [&](const json& obj, std::size_t) {
    RenderedExample ex;
    ex.sample_id = obj.at("sample_id").get<std::string>();
    ex.variant = parse_variant(obj.at("variant").get<std::string>());
    ex.input_text = obj.at("input_text").get<std::string>();
    ex.target_text = obj.at("target_text").get<std::string>();
    ex.template_version = obj.at("template_version").get<std::string>();
    ex.max_new_tokens = obj.value("max_new_tokens", kMaxNewTokens);
    out.push_back(std::move(ex));
  });
  return out;
}

std::string training_file_name(PromptVariant v) {
  return fmt::format("train_{}.jsonl", variant_name(v));
}

std::string test_file_name(PromptVariant v) {
  return fmt::format("test_{}.jsonl", variant_name(v));
}

NormAccFields parse_norm_acc_prompt(std::string_view input_text,
                                    const PromptTemplate& v1_template) {
  if (v1_template.variant() != PromptVariant::kNormAcc) {
    throw TemplateError("parse_norm_acc_prompt needs the v1_norm_acc template");
  }
  const auto tmpl_lines = split_lines(v1_template.body());
  const auto code_line = std::find_if(tmpl_lines.begin(), tmpl_lines.end(), [](auto l) {
    return l.find("{{code}}") != std::string_view::npos;
  });
  const auto head = static_cast<std::size_t>(code_line - tmpl_lines.begin());
  const auto tail = tmpl_lines.size() - head - 1;
  const auto lines = split_lines(input_text);
  if (lines.size() < head + tail + 1) {
    throw ParseError("prompt has fewer lines than the v1 template");
  }

  Captures caps;
  const auto align = [&](std::string_view tmpl_line, std::string_view line) {
    if (!match_line(tokenize(tmpl_line), 0, line, caps)) {
      throw ParseError(fmt::format(
          "prompt line \"{}\" does not match template line \"{}\"", line, tmpl_line));
    }
  };
  for (std::size_t i = 0; i < head; ++i) align(tmpl_lines[i], lines[i]);
  for (std::size_t i = 0; i < tail; ++i) {
    align(tmpl_lines[tmpl_lines.size() - 1 - i], lines[lines.size() - 1 - i]);
  }
  for (const auto* key : {"name_a", "acc_a", "name_b", "acc_b"}) {
    if (!caps.contains(key)) {
      throw ParseError(fmt::format("template slot {} is on the code line", key));
    }
  }
  return {caps.at("name_a"), caps.at("acc_a"), caps.at("name_b"), caps.at("acc_b")};
}

}  // namespace crossds
