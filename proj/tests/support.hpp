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

// Helpers shared by the test binaries.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "crossds/corpus.hpp"

namespace crossds::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("crossds_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (const char c : text) n += c == '\n';
  return n;
}

inline DatasetMeta dataset(std::int64_t id, std::string name) {
  return {DatasetId{id}, std::move(name), 1000, 32, 32, 3, 10};
}

inline ArchitectureRecord arch(std::string id) {
  return {id, "Net " + id, "class Net(nn.Module):\n    pass\n"};
}

// Datasets d1..dn named "Data-1".. and one architecture per accuracy row.
// rows[m][d] < 0 means "no record".
inline Corpus grid_corpus(const std::vector<std::vector<double>>& rows,
                          std::int64_t epoch = 5) {
  std::vector<ArchitectureRecord> archs;
  std::vector<DatasetMeta> datasets;
  std::vector<AccuracyRecord> accs;
  const std::size_t n = rows.empty() ? 0 : rows.front().size();
  for (std::size_t d = 0; d < n; ++d) {
    datasets.push_back(dataset(static_cast<std::int64_t>(d + 1),
                               "Data-" + std::to_string(d + 1)));
  }
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const std::string id = "m" + std::to_string(m + 1);
    archs.push_back(arch(id));
    for (std::size_t d = 0; d < n; ++d) {
      if (rows[m][d] < 0) continue;
      accs.push_back({id, DatasetId{static_cast<std::int64_t>(d + 1)}, epoch, rows[m][d]});
    }
  }
  return Corpus::build(std::move(archs), std::move(datasets), std::move(accs));
}

}  // namespace crossds::testing
