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

#include <cmath>
#include <random>
#include <set>

#include "volfc/explain.hpp"

namespace ex = volfc::explain;

namespace {

const std::vector<std::string> kFeatures{"log_returns", "lagged_volatility", "garch_forecast", "vix_close"};

std::vector<Eigen::MatrixXd> training_windows(std::size_t n, std::uint64_t seed, Eigen::Index rows = 22,
                                              Eigen::Index cols = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<Eigen::MatrixXd> w;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = z(rng);
    w.push_back(m);
  }
  return w;
}

ex::ExplainerConfig small_config() {
  ex::ExplainerConfig c;
  c.num_samples = 2000;
  c.num_features = 10;
  c.seed = 7;
  return c;
}

}  // namespace

TEST(Flatten, NamesAndCount) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Random(22, 4);
  const auto f = ex::flatten(w, kFeatures);
  ASSERT_EQ(f.names.size(), 88u);
  EXPECT_EQ(f.values.size(), 88);
  EXPECT_EQ(f.names[0], "t0 log_returns");
  EXPECT_EQ(f.names[21 * 4 + 1], "t21 lagged_volatility");
  EXPECT_EQ(f.values[21 * 4 + 1], w(21, 1));
}

TEST(Flatten, RoundTrip) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Random(7, 3);
  const auto f = ex::flatten(w, {"a", "b", "c"});
  EXPECT_EQ(ex::unflatten(f.values, 7, 3), w);
}

TEST(Flatten, RejectsMismatch) {
  EXPECT_THROW(ex::flatten(Eigen::MatrixXd(), {}), volfc::DataError);
  EXPECT_THROW(ex::flatten(Eigen::MatrixXd::Zero(2, 2), {"a"}), volfc::DataError);
}

TEST(Discretize, OneToEight) {
  std::vector<Eigen::MatrixXd> w;
  for (int v = 8; v >= 1; --v) w.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  const auto b = ex::discretize_stats(w);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_DOUBLE_EQ(b[0].cut[0], 2.75);
  EXPECT_DOUBLE_EQ(b[0].cut[1], 4.5);
  EXPECT_DOUBLE_EQ(b[0].cut[2], 6.25);
  EXPECT_DOUBLE_EQ(b[0].min, 1.0);
  EXPECT_DOUBLE_EQ(b[0].max, 8.0);
  EXPECT_TRUE(b[0].informative);
  EXPECT_EQ(b[0].bin(2.75), 0);
  EXPECT_EQ(b[0].bin(2.76), 1);
  EXPECT_EQ(b[0].bin(8.0), 3);
}

TEST(Discretize, ConstantCellUninformative) {
  std::vector<Eigen::MatrixXd> w;
  for (int i = 0; i < 6; ++i) {
    Eigen::MatrixXd m(1, 2);
    m << 3.0, i;
    w.push_back(m);
  }
  const auto b = ex::discretize_stats(w);
  EXPECT_FALSE(b[0].informative);
  EXPECT_EQ(b[0].cut[0], 3.0);
  EXPECT_EQ(b[0].cut[2], 3.0);
  EXPECT_TRUE(b[1].informative);
}

TEST(Discretize, NeedsFourWindows) {
  EXPECT_THROW(ex::discretize_stats(training_windows(3, 1)), volfc::DataError);
}

TEST(Perturb, SingleSampleIsInstance) {
  const auto bins = ex::discretize_stats(training_windows(50, 2));
  const auto x = ex::flatten(training_windows(1, 3)[0], kFeatures).values;
  const auto p = ex::perturb(x, bins, 1, 11);
  EXPECT_EQ(p.samples.rows(), 1);
  EXPECT_EQ(Eigen::VectorXd(p.samples.row(0).transpose()), x);
  EXPECT_EQ(p.binary.sum(), 88.0);
}

TEST(Perturb, Deterministic) {
  const auto bins = ex::discretize_stats(training_windows(50, 2));
  const auto x = ex::flatten(training_windows(1, 3)[0], kFeatures).values;
  const auto a = ex::perturb(x, bins, 300, 11);
  const auto b = ex::perturb(x, bins, 300, 11);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.binary, b.binary);
  const auto c = ex::perturb(x, bins, 300, 12);
  EXPECT_NE(a.samples, c.samples);
}

TEST(Perturb, BinMatchRateAndRanges) {
  const auto bins = ex::discretize_stats(training_windows(200, 4, 3, 2));
  const auto x = ex::flatten(training_windows(1, 5, 3, 2)[0], {"a", "b"}).values;
  const auto p = ex::perturb(x, bins, 10000, 21);
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    const double rate = p.binary.col(c).tail(9999).mean();
    EXPECT_NEAR(rate, 0.25, 0.02) << c;
    const auto& b = bins[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 1; i < p.samples.rows(); ++i) {
      const double v = p.samples(i, c);
      if (p.binary(i, c) == 1.0) {
        EXPECT_EQ(v, x[c]);
      } else {
        EXPECT_GE(v, b.min);
        EXPECT_LE(v, b.max);
        EXPECT_NE(b.bin(v), b.bin(x[c]));
      }
    }
  }
}

TEST(Kernel, Values) {
  EXPECT_EQ(ex::kernel(0.0, 2.0), 1.0);
  EXPECT_NEAR(ex::kernel(2.0, 2.0), 0.367879, 1e-6);
  double prev = 2.0;
  for (double d = 0.0; d < 10.0; d += 0.25) {
    const double k = ex::kernel(d, 3.0);
    EXPECT_LT(k, prev);
    prev = k;
  }
  EXPECT_THROW(ex::kernel(-1.0, 1.0), volfc::UsageError);
  EXPECT_THROW(ex::kernel(1.0, 0.0), volfc::UsageError);
}

TEST(Surrogate, RecoversLinearTarget) {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution coin(0.5);
  const Eigen::Index n = 20000;
  Eigen::MatrixXd z(n, 5);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) z(i, j) = coin(rng);
  Eigen::VectorXd beta(5);
  beta << 0.8, -0.5, 0.3, 0.0, -0.2;
  const Eigen::VectorXd y = (z * beta).array() + 1.5;
  const auto s = ex::fit_surrogate(z, y, Eigen::VectorXd::Ones(n), 5);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(s.coef[j], beta[j], 1e-6) << j;
  EXPECT_NEAR(s.intercept, 1.5, 1e-6);
  EXPECT_NEAR(s.r2, 1.0, 1e-9);
}

TEST(Surrogate, ThreePointHandSolve) {
  Eigen::MatrixXd z(3, 1);
  z << 0, 1, 2;
  const Eigen::VectorXd y = (Eigen::VectorXd(3) << 1, 2, 4).finished();
  const Eigen::VectorXd w = (Eigen::VectorXd(3) << 1, 2, 1).finished();
  // weighted means 1 and 2.25; Szz = 2, Szy = 3; slope = Szy / (Szz + lambda)
  const double slope = 3.0 / (2.0 + 1e-3);
  const auto s = ex::fit_surrogate(z, y, w, 1);
  EXPECT_NEAR(s.coef[0], slope, 1e-12);
  EXPECT_NEAR(s.intercept, 2.25 - slope, 1e-12);
}

TEST(Surrogate, TopKKeepsLargest) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd z(500, 5);
  for (Eigen::Index i = 0; i < 500; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) z(i, j) = coin(rng);
  const Eigen::VectorXd beta = (Eigen::VectorXd(5) << 5, 4, 0.1, 0.1, 0.1).finished();
  const auto s = ex::fit_surrogate(z, z * beta, Eigen::VectorXd::Ones(500), 2);
  EXPECT_EQ(std::set<std::size_t>(s.selected.begin(), s.selected.end()), (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(s.coef[2], 0.0);
  EXPECT_EQ(s.coef[3], 0.0);
  EXPECT_EQ(s.coef[4], 0.0);
}

TEST(Surrogate, ExcludedCellStaysZero) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd z(300, 3);
  for (Eigen::Index i = 0; i < 300; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) z(i, j) = coin(rng);
  const Eigen::VectorXd y = z.col(0) * 3.0 + z.col(1);
  const auto s = ex::fit_surrogate(z, y, Eigen::VectorXd::Ones(300), 3, {true, false, false});
  EXPECT_EQ(s.coef[0], 0.0);
  EXPECT_NE(s.coef[1], 0.0);
}

TEST(Surrogate, RejectsBadShapes) {
  EXPECT_THROW(ex::fit_surrogate(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(3), 1),
               volfc::DataError);
  EXPECT_THROW(ex::fit_surrogate(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3), 3),
               volfc::UsageError);
}

TEST(Explain, ConstantBlackBox) {
  const auto train = training_windows(100, 40);
  const auto bins = ex::discretize_stats(train);
  const auto e = ex::explain_instance([](const Eigen::MatrixXd&) { return 0.02; }, train[5], kFeatures, bins,
                                      small_config());
  EXPECT_EQ(e.predicted_value, 0.02);
  EXPECT_EQ(e.range_min, 0.02);
  EXPECT_EQ(e.range_max, 0.02);
  ASSERT_EQ(e.conditions.size(), 10u);
  for (const auto& c : e.conditions) EXPECT_EQ(c.weight, 0.0);
}

TEST(Explain, PlantedCellRanksFirst) {
  const auto train = training_windows(200, 41);
  const auto bins = ex::discretize_stats(train);
  Eigen::MatrixXd x = train[0];
  x(21, 1) = 3.0;  // top bin of the newest lagged-volatility cell
  const auto e = ex::explain_instance([](const Eigen::MatrixXd& w) { return w(21, 1); }, x, kFeatures, bins,
                                      small_config());
  ASSERT_FALSE(e.conditions.empty());
  EXPECT_EQ(e.conditions[0].cell, 21u * 4 + 1);
  EXPECT_GT(e.conditions[0].weight, 0.0);
  EXPECT_NE(e.conditions[0].text.find("t21 lagged_volatility"), std::string::npos);
  EXPECT_EQ(e.predicted_value, 3.0);
}

TEST(Explain, Deterministic) {
  const auto train = training_windows(100, 42);
  const auto bins = ex::discretize_stats(train);
  auto model = [](const Eigen::MatrixXd& w) { return std::tanh(w.sum() / 10.0); };
  const auto a = ex::explain_instance(model, train[3], kFeatures, bins, small_config());
  const auto b = ex::explain_instance(model, train[3], kFeatures, bins, small_config());
  EXPECT_EQ(ex::report(a), ex::report(b));
  ASSERT_EQ(a.conditions.size(), b.conditions.size());
  for (std::size_t i = 0; i < a.conditions.size(); ++i) EXPECT_EQ(a.conditions[i].weight, b.conditions[i].weight);
}

// Planted targets are linear in the bin-match indicators the surrogate sees:
// the black box reads raw windows and adds a weight for every planted cell
// that sits in the instance's bin.
TEST(Explain, PlantedLinearFidelity) {
  const auto train = training_windows(200, 43);
  const auto bins = ex::discretize_stats(train);
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> cell(0, 87);
  std::normal_distribution<double> coef;
  for (int plant = 0; plant < 20; ++plant) {
    const Eigen::MatrixXd& x = train[static_cast<std::size_t>(plant)];
    std::vector<std::pair<int, double>> terms;
    for (int k = 0; k < 3; ++k) terms.emplace_back(cell(rng), coef(rng));
    auto model = [&](const Eigen::MatrixXd& w) {
      double s = 0.0;
      for (auto [c, b] : terms) {
        const auto& cb = bins[static_cast<std::size_t>(c)];
        if (cb.bin(w(c / 4, c % 4)) == cb.bin(x(c / 4, c % 4))) s += b;
      }
      return s;
    };
    const auto e = ex::explain_instance(model, x, kFeatures, bins, small_config());
    EXPECT_GE(e.r2, 0.5) << "plant " << plant;
  }
}

// Targets linear in the raw cell values are only partly visible through the
// bin indicators. Reported, not asserted.
TEST(Explain, RawLinearFidelityReported) {
  const auto train = training_windows(200, 43);
  const auto bins = ex::discretize_stats(train);
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> cell(0, 87);
  std::normal_distribution<double> coef;
  double lo = 1.0, sum = 0.0;
  for (int plant = 0; plant < 20; ++plant) {
    std::vector<std::pair<int, double>> terms;
    for (int k = 0; k < 3; ++k) terms.emplace_back(cell(rng), coef(rng));
    auto model = [&](const Eigen::MatrixXd& w) {
      double s = 0.0;
      for (auto [c, b] : terms) s += b * w(c / 4, c % 4);
      return s;
    };
    const auto e = ex::explain_instance(model, train[static_cast<std::size_t>(plant)], kFeatures, bins, small_config());
    EXPECT_TRUE(std::isfinite(e.r2));
    lo = std::min(lo, e.r2);
    sum += e.r2;
  }
  std::printf("raw-linear weighted R2: min %.3f mean %.3f\n", lo, sum / 20.0);
}

TEST(Explain, ModelFailureNamesSample) {
  const auto train = training_windows(20, 45);
  const auto bins = ex::discretize_stats(train);
  int calls = 0;
  auto model = [&](const Eigen::MatrixXd&) -> double {
    if (++calls == 4) throw volfc::NumericError("boom");
    return 1.0;
  };
  try {
    ex::explain_instance(model, train[0], kFeatures, bins, small_config());
    FAIL() << "expected a failure";
  } catch (const volfc::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("sample 3"), std::string::npos) << e.what();
  }
}

TEST(Explain, ReportSections) {
  const auto train = training_windows(40, 46);
  const auto bins = ex::discretize_stats(train);
  const auto e = ex::explain_instance([](const Eigen::MatrixXd& w) { return w(0, 0); }, train[0], kFeatures, bins,
                                      small_config());
  const std::string r = ex::report(e);
  EXPECT_NE(r.find("[predicted value]"), std::string::npos);
  EXPECT_NE(r.find("[negative and positive]"), std::string::npos);
  EXPECT_NE(r.find("[feature values]"), std::string::npos);
}

TEST(Explain, ConfigChecks) {
  const auto train = training_windows(20, 47);
  const auto bins = ex::discretize_stats(train);
  auto cfg = small_config();
  cfg.num_samples = 5;
  auto model = [](const Eigen::MatrixXd&) { return 0.0; };
  EXPECT_THROW(ex::explain_instance(model, train[0], kFeatures, bins, cfg), volfc::UsageError);
  cfg = small_config();
  cfg.num_features = 89;
  EXPECT_THROW(ex::explain_instance(model, train[0], kFeatures, bins, cfg), volfc::UsageError);
}
