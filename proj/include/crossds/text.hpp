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

#include <string>
#include <string_view>
#include <utility>

namespace crossds {

// Lowercases ASCII letters and drops every character that is not [a-z0-9].
// "CIFAR-10" -> "cifar10".
std::string normalize_name(std::string_view text);

// Fixed-point rendering with exactly `places` digits after the point.
std::string format_fixed(double value, int places);

// Renders two distinct values with at least `min_places` decimals, adding
// digits until the renderings differ. Equal values render at `min_places`.
std::pair<std::string, std::string> format_distinct(double a, double b,
                                                    int min_places);

// True when `text` is an unsigned decimal numeral: digits, optionally
// followed by '.' and more digits.
bool is_decimal_numeral(std::string_view text);

// Exact comparison of two unsigned decimal numerals (no rounding through
// binary floating point). Both must satisfy is_decimal_numeral.
int compare_decimal(std::string_view a, std::string_view b);

std::string_view trim(std::string_view text);

}  // namespace crossds
