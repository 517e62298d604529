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

#include "crossds/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cassert>

namespace crossds {

std::string normalize_name(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      out.push_back(c);
    }
  }
  return out;
}

std::string format_fixed(double value, int places) {
  return fmt::format("{:.{}f}", value, places);
}

std::pair<std::string, std::string> format_distinct(double a, double b,
                                                    int min_places) {
  std::string ra = format_fixed(a, min_places);
  std::string rb = format_fixed(b, min_places);
  if (a == b) return {ra, rb};
  // Distinct doubles have distinct finite decimal expansions; 1100 digits
  // covers the smallest subnormal.
  for (int places = min_places + 1; ra == rb && places <= 1100; ++places) {
    ra = format_fixed(a, places);
    rb = format_fixed(b, places);
  }
  return {std::move(ra), std::move(rb)};
}

bool is_decimal_numeral(std::string_view text) {
  const auto dot = text.find('.');
  const auto int_part = text.substr(0, dot);
  if (int_part.empty()) return false;
  const auto all_digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!all_digits(int_part)) return false;
  if (dot == std::string_view::npos) return true;
  const auto frac = text.substr(dot + 1);
  return !frac.empty() && all_digits(frac);
}

int compare_decimal(std::string_view a, std::string_view b) {
  assert(is_decimal_numeral(a) && is_decimal_numeral(b));
  const auto split = [](std::string_view s) {
    const auto dot = s.find('.');
    std::string_view whole = s.substr(0, dot);
    std::string_view frac =
        dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    while (whole.size() > 1 && whole.front() == '0') whole.remove_prefix(1);
    while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);
    return std::pair{whole, frac};
  };
  const auto [wa, fa] = split(a);
  const auto [wb, fb] = split(b);
  if (wa.size() != wb.size()) return wa.size() < wb.size() ? -1 : 1;
  if (const int c = wa.compare(wb); c != 0) return c < 0 ? -1 : 1;
  // Fractions compare lexicographically once trailing zeros are gone.
  if (const int c = fa.compare(fb); c != 0) return c < 0 ? -1 : 1;
  return 0;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

}  // namespace crossds
