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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
//
//   acceptance                 run every criterion
//   acceptance 4 9 12          run the listed criteria only
//   acceptance --windows ROWS TRAIN VAL STRIDE LOOKBACK
//                              print the walk-forward plan of a synthetic table

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "volfc/adf.hpp"
#include "volfc/commands.hpp"
#include "volfc/evaluate.hpp"
#include "volfc/explain.hpp"
#include "volfc/garch.hpp"
#include "volfc/neural.hpp"
#include "volfc/pipeline.hpp"
#include "volfc/scaler.hpp"

using namespace volfc;
namespace pl = volfc::pipeline;
using pl::ModelVariant;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1

// sigma^2 by direct substitution, with padded histories standing in for the
// pre-sample lags.
std::vector<double> hand_recursion(double omega, const std::vector<double>& alpha, const std::vector<double>& beta,
                                   double mu, const std::vector<double>& r, double seed) {
  const std::size_t pad = std::max(alpha.size(), beta.size());
  std::vector<double> e2(pad, seed), s2(pad, seed);
  for (double x : r) e2.push_back((x - mu) * (x - mu));
  for (std::size_t t = 0; t < r.size(); ++t) {
    const std::size_t now = pad + t;
    double v = omega;
    for (std::size_t i = 0; i < alpha.size(); ++i) v += alpha[i] * e2[now - 1 - i];
    for (std::size_t j = 0; j < beta.size(); ++j) v += beta[j] * s2[now - 1 - j];
    s2.push_back(v);
  }
  return {s2.begin() + static_cast<std::ptrdiff_t>(pad), s2.end()};
}

Outcome recursion_oracle() {
  struct Case {
    double omega;
    std::vector<double> alpha, beta;
    double mu;
    std::vector<double> r;
    std::optional<double> seed;
  };
  const std::vector<Case> cases{
      {0.1, {0.1}, {0.8}, 0.0, {1.0, -2.0, 0.5, 3.0, -1.0}, 1.0},
      {0.05, {0.2}, {}, 0.0, {0.3, -0.3, 1.2, -0.7}, 0.5},
      {0.2, {0.05}, {0.9}, 0.1, {0.4, 0.0, -0.6, 2.2, -1.9, 0.8}, std::nullopt},
      {1e-6, {0.08}, {0.9}, 0.0, {0.01, -0.02, 0.015, -0.004, 0.03}, 1e-4},
      {0.1, {0.1, 0.05}, {0.7}, 0.0, {-1.0, 2.0, -3.0, 0.5, 0.25, 1.5}, 2.0},
      {0.3, {0.1}, {0.4, 0.3}, -0.2, {0.9, -0.1, 0.0, 1.1, -2.5, 0.7, 0.3}, std::nullopt},
      {0.02, {0.1, 0.1}, {0.4, 0.3}, 0.0, {4.0, 3.0, 2.0, 1.0, 0.0, -1.0}, 3.0},
      {0.5, {0.0}, {0.5}, 0.0, {10.0, -10.0, 10.0}, 1.0},
      {0.01, {0.05, 0.04, 0.03}, {0.3, 0.2, 0.1, 0.05}, 0.05, {0.2, -0.4, 0.6, -0.8, 1.0, -1.2, 1.4, -1.6}, 0.25},
      {0.1, {0.3}, {0.0, 0.6}, 0.0, {1.0, 1.0, 1.0, 1.0, 1.0}, std::nullopt},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    garch::GarchParams p;
    p.omega = c.omega;
    p.alpha = c.alpha;
    p.beta = c.beta;
    p.mean = c.mu;
    double seed = 0.0;
    if (c.seed) {
      seed = *c.seed;
    } else {
      for (double x : c.r) seed += (x - c.mu) * (x - c.mu);
      seed /= static_cast<double>(c.r.size());
    }
    const auto got = garch::conditional_variance(p, c.r, c.seed);
    const auto want = hand_recursion(c.omega, c.alpha, c.beta, c.mu, c.r, seed);
    for (std::size_t t = 0; t < got.size(); ++t) worst = std::max(worst, std::abs(got[t] - want[t]));
  }
  return {worst <= 1e-12, fmt("10 cases, max abs diff %.3g (tol 1e-12)", worst)};
}

// ---------------------------------------------------------------------------
// 2, 3

garch::FitOptions percent_units() {
  garch::FitOptions o;
  o.scale = 1.0;
  return o;
}

garch::GarchParams params(double omega, std::vector<double> alpha, std::vector<double> beta) {
  garch::GarchParams p;
  p.omega = omega;
  p.alpha = std::move(alpha);
  p.beta = std::move(beta);
  return p;
}

Outcome garch_recovery() {
  int recovered = 0, picked = 0;
  std::string orders;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = garch::simulate(params(0.1, {0.1}, {0.8}), 20000, seed);
    std::vector<garch::GarchFit> all;
    const auto best = garch::select_order(r, 4, 4, percent_units(), &all, 0);
    for (const auto& f : all)
      if (f.p == 1 && f.q == 1) {
        const auto& q = f.params;
        if (std::abs(q.omega - 0.1) <= 0.05 && std::abs(q.alpha[0] - 0.1) <= 0.05 && std::abs(q.beta[0] - 0.8) <= 0.05)
          ++recovered;
      }
    if (best.p == 1 && best.q == 1) ++picked;
    orders += fmt("%s(%d,%d)", orders.empty() ? "" : " ", best.p, best.q);
  }
  return {recovered >= 7 && picked >= 8,
          fmt("recovered %d/10 (need 7), (1,1) chosen %d/10 (need 8); orders %s", recovered, picked, orders.c_str())};
}

Outcome aic_identity() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> ord(0, 2);
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    const int p = ord(rng), q = std::max(1, ord(rng));
    const auto r = garch::simulate(params(0.1, {0.1}, {0.8}), 300, rng());
    const auto f = garch::fit(r, p, q, percent_units());
    if (!(f.aic == 2.0 * f.k - 2.0 * f.loglik) || f.k != 2 + p + q) ++bad;
  }
  return {bad == 0, fmt("100 fits, %d violations", bad)};
}

// ---------------------------------------------------------------------------
// 4

Outcome adf_discrimination() {
  int kept = 0, rejected = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> walk(2000), noise(2000);
    double s = 0.0;
    for (auto& v : walk) v = (s += z(rng));
    for (auto& v : noise) v = z(rng);
    if (!garch::adf_test(walk).reject_1) ++kept;
    if (garch::adf_test(noise).reject_1) ++rejected;
  }
  return {kept >= 9 && rejected >= 9,
          fmt("random walk not rejected %d/10, white noise rejected %d/10 (need 9 each)", kept, rejected)};
}

// ---------------------------------------------------------------------------
// 5, 6

double gradient_error(std::uint64_t trial, nn::LossKind kind) {
  nn::NetworkConfig c;
  c.layers = {{4, nn::Activation::kTanh, 0.0}};
  c.recurrent_dropout = 0.0;
  c.loss = kind;
  nn::LstmNetwork net(c, 2);
  std::mt19937_64 r(trial);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()[i] = u(r);
  net.dense_b() = 1.0;  // keep the rectified head away from its kink
  std::vector<nn::Sequence> xs;
  std::vector<double> ys;
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < 6; ++s) {
    xs.push_back(nn::Sequence::NullaryExpr(3, 2, [&] { return 2.0 * u(r); }));
    ys.push_back(u(r) + 1.0);
    idx.push_back(s);
  }
  const auto in = nn::make_batch(xs, idx);
  nn::ForwardCache cache;
  nn::forward_batch(net, in, cache);
  const Eigen::VectorXd g = nn::backward(net, cache, ys, kind);
  auto objective = [&] {
    nn::ForwardCache cc;
    nn::forward_batch(net, in, cc);
    return nn::loss(kind, std::span<const double>(cc.y.data(), 6), ys);
  };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double keep = net.parameters()[i];
    net.parameters()[i] = keep + 1e-5;
    const double a = objective();
    net.parameters()[i] = keep - 1e-5;
    const double b = objective();
    net.parameters()[i] = keep;
    const double num = (a - b) / 2e-5;
    worst = std::max(worst, std::abs(num - g[i]) / std::max({std::abs(num), std::abs(g[i]), 1e-7}));
  }
  return worst;
}

Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t)
    worst = std::max(worst, gradient_error(t, t % 2 ? nn::LossKind::kMae : nn::LossKind::kMse));
  return {worst <= 1e-4, fmt("20 networks, worst relative error %.3g (tol 1e-4)", worst)};
}

Outcome capacity() {
  nn::Dataset d;
  std::mt19937_64 r(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 32; ++s) {
    nn::Sequence x = nn::Sequence::NullaryExpr(5, 1, [&] { return u(r); });
    d.y.push_back(x.mean());
    d.x.push_back(std::move(x));
  }
  nn::NetworkConfig c;
  c.layers = {{8, nn::Activation::kTanh, 0.0}};
  c.recurrent_dropout = 0.0;
  c.learning_rate = 0.001;
  c.epochs = 2000;
  c.patience = 2000;
  c.batch_size = 32;
  c.seed = 7;
  auto net = nn::make_network(c, 1);
  const auto h = nn::train(net, d, d);
  const double mse = nn::evaluate_loss(net, d, nn::LossKind::kMse);
  return {mse < 1e-3, fmt("training MSE %.3g after %zu epochs (need < 1e-3)", mse, h.epochs.size())};
}

// ---------------------------------------------------------------------------
// 7, 8

Outcome scaler_round_trip() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> dim(1, 16);
  double worst = 0.0, lo = 0.0, hi = 1.0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::MatrixXd x(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const auto s = MinMaxScaler::fit(x);
    const Eigen::MatrixXd y = s.transform(x);
    lo = std::min(lo, y.minCoeff());
    hi = std::max(hi, y.maxCoeff());
    worst = std::max(worst, (s.inverse(y) - x).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12 && lo >= 0.0 && hi <= 1.0,
          fmt("max round-trip error %.3g (tol 1e-12), transformed range [%g, %g]", worst, lo, hi)};
}

Outcome mann_whitney_oracle() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int over = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(static_cast<std::size_t>(size(rng))), b(static_cast<std::size_t>(size(rng)));
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const double pn = eval::mann_whitney_u(a, b, eval::PValueMethod::kNormal).p;
    const double pe = eval::mann_whitney_u(a, b, eval::PValueMethod::kExact).p;
    worst = std::max(worst, std::abs(pn - pe));
    if (std::abs(pn - pe) > 0.05) ++over;
  }
  bool half = true;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(static_cast<std::size_t>(size(rng)));
    for (auto& v : a) v = std::floor(4.0 * u(rng));
    const auto r = eval::mann_whitney_u(a, a);
    half = half && r.u == static_cast<double>(a.size() * a.size()) / 2.0;
  }
  return {over == 0 && half, fmt("normal vs exact: %d/200 pairs beyond 0.05, worst %.3f; U = nm/2 on identical samples: %s",
                                 over, worst, half ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 9

struct Plan {
  std::size_t samples = 0, first_index = 0, first_row = 0, predictions = 0, refits = 0;
};

// Walk-forward plan of a synthetic table with `rows` rows.
Plan plan_of(std::size_t rows, const pl::WalkForwardConfig& wf, int lookback) {
  pl::FeatureTable t;
  t.dates = business_days({2000, 1, 3}, rows);
  t.names = {"log_returns", "lagged_volatility"};
  t.x = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(rows), 2);
  t.target.assign(rows, 0.01);
  t.garch.assign(rows, 0.01);
  t.gap_before.assign(rows, 0);
  const auto d = pl::make_sequences(t, lookback);
  const auto run = pl::walk_forward(ModelVariant::kGarch, d, wf, {}, 1);
  Plan p;
  p.samples = d.size();
  p.first_index = static_cast<std::size_t>(
      std::find(d.dates.begin(), d.dates.end(), run.predictions.front().date) - d.dates.begin());
  p.first_row = d.target_rows[p.first_index];
  p.predictions = run.predictions.size();
  p.refits = run.windows.size();
  return p;
}

std::string plan_text(const Plan& p) {
  return fmt("samples=%zu first_index=%zu first_row=%zu predictions=%zu refits=%zu", p.samples, p.first_index,
             p.first_row, p.predictions, p.refits);
}

Outcome walk_forward_arithmetic() {
  const pl::WalkForwardConfig wf{3024, 756, 252, 1};
  const Plan p = plan_of(6032, wf, 22);
  const std::size_t expect_count = 6032 - 3780 - 22;
  const std::size_t expect_refits = (expect_count + 251) / 252;
  bool ok = p.first_index == 3780 && p.predictions == expect_count && p.refits == expect_refits;
  std::string detail = plan_text(p) + fmt(" (expected 3780, %zu, %zu)", expect_count, expect_refits);
#ifdef VOLFC_PYTHON
  const std::string cmd = std::string(VOLFC_PYTHON) + " " + support::source_path("tests/window_calculator.py") +
                          " --rows 6032 --train 3024 --val 756 --stride 252 --lookback 22 --expect \"" +
                          plan_text(p) + "\" > /dev/null 2>&1";
  const bool script = std::system(cmd.c_str()) == 0;
  ok = ok && script;
  detail += script ? "; window calculator agrees" : "; window calculator disagrees";
#endif
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// Desk-profile runs shared by 10, 11, 14

ExperimentConfig desk_config() {
  ExperimentConfig c(Profile::kDesk);
  c.set("data.sp500", support::source_path("data/sp500.csv"));
  c.set("data.vix", support::source_path("data/vix_proxy.csv"));
  c.validate();
  return c;
}

pl::MarketData desk_data() {
  cli::Options o;
  std::ostringstream quiet;
  o.log = &quiet;
  return cli::load_market_data(desk_config(), o);
}

struct Baseline {
  pl::MarketData data;
  pl::PipelineConfig pc;
  pl::GarchForecasts garch;
  std::map<ModelVariant, pl::WalkForwardRun> runs;
};

const Baseline& baseline() {
  static std::optional<Baseline> b;
  if (!b) {
    Baseline x;
    const auto cfg = desk_config();
    x.data = desk_data();
    x.pc = cfg.pipeline();
    x.garch = pl::garch_feature(x.data.sp500, x.pc);
    auto out = pl::run_all({pl::kAllVariants.begin(), pl::kAllVariants.end()}, x.data, x.pc, cfg.seed(), 1, &x.garch);
    for (auto& [v, o] : out) {
      if (!o.run) throw DataError(std::string("desk baseline ") + pl::to_string(v) + ": " + o.error);
      x.runs.emplace(v, std::move(*o.run));
    }
    b = std::move(x);
  }
  return *b;
}

PriceSeries edit(const PriceSeries& p, Date cut, std::optional<Date> bump, double factor) {
  std::vector<Date> d;
  std::vector<double> c;
  for (std::size_t i = 0; i < p.size() && !(cut < p.dates()[i]); ++i) {
    d.push_back(p.dates()[i]);
    c.push_back(p.close()[i] * (bump && p.dates()[i] == *bump ? factor : 1.0));
  }
  return PriceSeries(std::move(d), std::move(c));
}

// ---------------------------------------------------------------------------
// 10

// Each probe bumps the S&P and VIX closes on one test-span date t and reruns
// on data ending with the test block that holds t, so the bumped row is
// inside every rerun. Predictions dated <= t must equal the unbumped run.
Outcome no_leakage() {
  const Baseline& b = baseline();
  const auto& ref_garch = b.runs.at(ModelVariant::kGarch);
  const std::size_t n = ref_garch.predictions.size();
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::set<std::size_t> rows;
  const std::size_t per_row = pl::kAllVariants.size();
  const std::size_t pairs_wanted = 50;
  while (rows.size() * per_row < pairs_wanted) rows.insert(pick(rng));

  std::size_t pairs = 0, compared = 0, moved_later = 0;
  int violations = 0;
  for (std::size_t idx : rows) {
    const Date t = ref_garch.predictions[idx].date;
    const int w = ref_garch.predictions[idx].window;
    Date cut = t;
    for (const auto& p : ref_garch.predictions)
      if (p.window == w) cut = p.date;
    pl::MarketData m;
    m.sp500 = edit(b.data.sp500, cut, t, 1.05);
    m.vix = edit(*b.data.vix, cut, t, 1.25);
    std::vector<ModelVariant> vs;
    for (auto v : pl::kAllVariants)
      if (pairs + vs.size() < pairs_wanted) vs.push_back(v);
    const auto out = pl::run_all(vs, m, b.pc, desk_config().seed());
    for (auto v : vs) {
      ++pairs;
      const auto& o = out.at(v);
      if (!o.run) {
        ++violations;
        continue;
      }
      const auto& ref = b.runs.at(v).predictions;
      for (std::size_t k = 0; k < o.run->predictions.size(); ++k) {
        const auto& p = o.run->predictions[k];
        if (t < p.date) {
          if (p.prediction != ref[k].prediction) ++moved_later;
          continue;
        }
        ++compared;
        if (p.date != ref[k].date || p.prediction != ref[k].prediction) ++violations;
      }
    }
  }
  return {violations == 0 && pairs >= pairs_wanted,
          fmt("%zu (row, run) pairs over %zu rows, %zu predictions dated <= t compared, %d changed; "
              "%zu later predictions moved",
              pairs, rows.size(), compared, violations, moved_later)};
}

// ---------------------------------------------------------------------------
// 11

Outcome desk_ordering() {
  const Baseline& b = baseline();
  const auto cfg = desk_config();
  const double garch_mae = eval::mae(b.runs.at(ModelVariant::kGarch).forecasts(), b.runs.at(ModelVariant::kGarch).actuals());
  int wins = 0;
  std::string maes;
  const std::uint64_t seeds[] = {cfg.seed(), cfg.seed() + 1, cfg.seed() + 2};
  for (std::uint64_t seed : seeds) {
    pl::WalkForwardRun run;
    if (seed == cfg.seed()) {
      run = b.runs.at(ModelVariant::kLstmGarch);
    } else {
      auto out = pl::run_all({ModelVariant::kLstmGarch}, b.data, b.pc, seed, 1, &b.garch);
      auto& o = out.at(ModelVariant::kLstmGarch);
      if (!o.run) return {false, "seed " + std::to_string(seed) + ": " + o.error};
      run = std::move(*o.run);
    }
    const double m = eval::mae(run.forecasts(), run.actuals());
    if (m <= garch_mae) ++wins;
    maes += fmt("%s%.3e", maes.empty() ? "" : " ", m);
  }
  return {wins >= 2, fmt("GARCH MAE %.3e; LSTM_GARCH MAE by seed %s; hybrid <= GARCH in %d/3 (need 2)", garch_mae,
                         maes.c_str(), wins)};
}

// ---------------------------------------------------------------------------
// 12

Outcome improvement_arithmetic() {
  const double mae = eval::improvement(1.56e-3, 1.02e-3);
  // 46.03% needs an unrounded challenger RMSE near 1.29e-3; the printed input is 1.30e-3
  const double lo = eval::improvement(2.39e-3, 1.30e-3);
  const double hi = eval::improvement(2.39e-3, 1.29e-3);
  const bool ok = std::abs(mae - 34.62) <= 0.01 && std::abs(lo - 45.61) <= 0.005 && std::abs(hi - 46.03) <= 0.005;
  return {ok, fmt("MAE %.4f%% (34.62 +/- 0.01); RMSE %.4f%% with 1.30e-3, %.4f%% with 1.29e-3 (45.61..46.03)", mae,
                  lo, hi)};
}

// ---------------------------------------------------------------------------
// 13

Outcome lime_properties() {
  const std::vector<std::string> features{"log_returns", "lagged_volatility", "garch_forecast", "vix_close"};
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z;
  std::vector<Eigen::MatrixXd> train;
  for (int i = 0; i < 200; ++i) train.push_back(Eigen::MatrixXd::NullaryExpr(22, 4, [&] { return z(rng); }));
  const auto bins = explain::discretize_stats(train);
  explain::ExplainerConfig cfg;
  cfg.num_samples = 2000;
  cfg.num_features = 10;
  cfg.seed = 7;

  auto smooth = [](const Eigen::MatrixXd& w) { return std::tanh(w.sum() / 10.0); };
  const auto a = explain::explain_instance(smooth, train[3], features, bins, cfg);
  const auto b = explain::explain_instance(smooth, train[3], features, bins, cfg);
  const bool deterministic = explain::report(a) == explain::report(b);

  const auto c = explain::explain_instance([](const Eigen::MatrixXd&) { return 0.02; }, train[5], features, bins, cfg);
  bool zero = true;
  for (const auto& k : c.conditions) zero = zero && k.weight == 0.0;

  Eigen::MatrixXd x = train[0];
  x(21, 1) = 3.0;
  const auto d = explain::explain_instance([](const Eigen::MatrixXd& w) { return w(21, 1); }, x, features, bins, cfg);
  const bool planted = !d.conditions.empty() && d.conditions[0].cell == 21u * 4 + 1;

  // Targets linear in the bin-match indicators the surrogate sees.
  std::uniform_int_distribution<int> cell(0, 87);
  double worst = 1.0;
  for (int plant = 0; plant < 20; ++plant) {
    const Eigen::MatrixXd& inst = train[static_cast<std::size_t>(plant)];
    std::vector<std::pair<int, double>> terms;
    for (int k = 0; k < 3; ++k) terms.emplace_back(cell(rng), z(rng));
    auto model = [&](const Eigen::MatrixXd& w) {
      double s = 0.0;
      for (auto [cc, coef] : terms) {
        const auto& cb = bins[static_cast<std::size_t>(cc)];
        if (cb.bin(w(cc / 4, cc % 4)) == cb.bin(inst(cc / 4, cc % 4))) s += coef;
      }
      return s;
    };
    worst = std::min(worst, explain::explain_instance(model, inst, features, bins, cfg).r2);
  }
  return {deterministic && zero && planted && worst >= 0.5,
          fmt("deterministic %s, constant -> zero weights %s, planted cell first %s, min weighted R2 %.3f over 20 plants",
              deterministic ? "yes" : "no", zero ? "yes" : "no", planted ? "yes" : "no", worst)};
}

// ---------------------------------------------------------------------------
// 14

Outcome sweep_integrity() {
  ExperimentConfig cfg = desk_config();
  cfg.merge_text(sweep_block(paper_sweep()));
  const std::string out = support::scratch_dir("acceptance_sweep");
  std::ostringstream log;
  cli::Options o;
  o.out = out;
  o.log = &log;
  std::vector<cli::SweepRow> rows;
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::cmd_sweep(cfg, o, &rows);
  std::cout.rdbuf(old);

  int completed = 0, one_key = 0;
  const auto base = io::KeyValue::parse(io::read_file(out + "/base/manifest.txt"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].ok) ++completed;
    const std::string path = out + "/" + rows[i].name + "/manifest.txt";
    if (!std::filesystem::exists(path)) continue;
    const auto kv = io::KeyValue::parse(io::read_file(path));
    std::set<std::string> keys;
    for (const auto& [k, v] : base.entries())
      if (!kv.contains(k) || kv.get(k) != v) keys.insert(k);
    for (const auto& [k, v] : kv.entries())
      if (!base.contains(k)) keys.insert(k);
    if (keys.size() == 1 && *keys.begin() == "config." + paper_sweep()[i - 1].key) ++one_key;
  }
  const std::string summary = io::read_file(out + "/sweep_summary.txt");
  const bool marked = summary.find("base (*)") != std::string::npos;
  const bool ok = code == 0 && rows.size() == 8 && rows[0].ok && completed == 7 && one_key == 7 && marked;
  std::string maes;
  for (const auto& r : rows) maes += fmt("%s%s=%.3e", maes.empty() ? "" : " ", r.name.c_str(), r.mae);
  return {ok, fmt("exit %d, %d/7 scenarios completed, %d/7 manifests differ in exactly their key, base marked %s; %s",
                  code, completed, one_key, marked ? "yes" : "no", maes.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // runtime bound, 0 when none
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args[0] == "--windows") {
    if (args.size() != 6) {
      std::fprintf(stderr, "usage: acceptance --windows ROWS TRAIN VAL STRIDE LOOKBACK\n");
      return 1;
    }
    const pl::WalkForwardConfig wf{std::stoul(args[2]), std::stoul(args[3]), std::stoul(args[4]), 1};
    std::printf("%s\n", plan_text(plan_of(std::stoul(args[1]), wf, std::stoi(args[5]))).c_str());
    return 0;
  }

  const std::vector<Criterion> all{
      {1, "GARCH recursion oracle", 1.0, recursion_oracle},
      {2, "GARCH recovery and order selection", 120.0, garch_recovery},
      {3, "AIC identity", 0.0, aic_identity},
      {4, "ADF discrimination", 10.0, adf_discrimination},
      {5, "LSTM gradient check", 60.0, gradient_check},
      {6, "LSTM capacity", 60.0, capacity},
      {7, "Scaling round trip", 0.0, scaler_round_trip},
      {8, "Mann-Whitney oracle", 0.0, mann_whitney_oracle},
      {9, "Walk-forward arithmetic", 0.0, walk_forward_arithmetic},
      {10, "No-leakage probe", 0.0, no_leakage},
      {11, "Desk-scale ordering (LSTM_GARCH vs GARCH)", 1800.0, desk_ordering},
      {12, "Improvement arithmetic", 0.0, improvement_arithmetic},
      {13, "LIME properties", 60.0, lime_properties},
      {14, "Sweep integrity", 0.0, sweep_integrity},
  };
  std::set<int> only;
  for (const auto& a : args) only.insert(std::stoi(a));

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::string timing = fmt("%.1fs", secs);
    if (c.budget_s > 0.0) timing += fmt(" of %.0fs%s", c.budget_s, in_time ? "" : " OVER BUDGET");
    std::printf("criterion %2d %-42s %s  [%s] %s\n", c.id, c.name, pass ? "PASS" : "FAIL", timing.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
