/*
 * Copyright 2026 The volfc Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "volfc/timeseries.hpp"

namespace volfc::support {

inline std::string source_path(const std::string& rel) { return std::string(VOLFC_SOURCE_DIR) + "/" + rel; }

/// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("volfc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

/// Geometric random walk with GARCH-free Gaussian log returns.
inline PriceSeries random_prices(std::size_t n, std::uint64_t seed, double sd = 0.01, Date start = {2000, 1, 3}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> close(n);
  double p = 100.0;
  for (auto& c : close) {
    c = p;
    p *= std::exp(z(rng));
  }
  return PriceSeries(business_days(start, n), std::move(close));
}

}  // namespace volfc::support
