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

#include <gtest/gtest.h>

#include <iostream>
#include <random>

#include "support.hpp"
#include "volfc/adf.hpp"

using namespace volfc;

namespace {
std::vector<double> saw(int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) x[static_cast<std::size_t>(t)] = ((t * 37) % 23) - 11 + 0.1 * (t % 5) + 0.05 * t;
  return x;
}
}  // namespace

TEST(Adf, MatchesStatsmodelsRegression) {
  // statsmodels adfuller(x, maxlag=L, autolag=None, regression="c")
  const auto x = saw(100);
  const std::pair<int, double> ref[] = {{0, -14.882799414087392}, {2, -6.112147943364751}, {5, -2.8086170875041687}};
  for (auto [lags, stat] : ref) {
    const auto r = garch::adf_test(x, lags);
    EXPECT_NEAR(r.statistic, stat, 1e-9) << "lags " << lags;
    EXPECT_EQ(r.nobs, 100u - static_cast<std::size_t>(lags) - 1u);
  }
}

TEST(Adf, RandomWalkFailsToReject) {
  int kept = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> x(2000);
    double s = 0.0;
    for (auto& v : x) v = (s += z(rng));
    if (!garch::adf_test(x).reject_5) ++kept;
  }
  EXPECT_GE(kept, 9);
}

TEST(Adf, WhiteNoiseRejects) {
  int rejected = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> z;
    std::vector<double> x(2000);
    for (auto& v : x) v = z(rng);
    if (garch::adf_test(x).reject_1) ++rejected;
  }
  EXPECT_GE(rejected, 9);
}

TEST(Adf, SnapshotReturnsStronglyStationary) {
  const auto p = ingest_csv(support::source_path("data/sp500.csv")).series;
  auto r = log_returns(p).values;
  for (auto& v : r) v *= 100.0;
  const auto a = garch::adf_test(r);
  std::cout << "snapshot ADF statistic " << a.statistic << " with " << a.lags << " lags\n";
  EXPECT_LT(a.statistic, -20.0);
  EXPECT_TRUE(a.reject_1);
}

TEST(Adf, DefaultLagRule) {
  EXPECT_EQ(garch::schwert_lags(100), 12);
  EXPECT_EQ(garch::schwert_lags(2000), 25);
}

TEST(Adf, RejectsShortSeries) {
  EXPECT_THROW(garch::adf_test(std::vector<double>(10, 1.0)), DataError);
}
