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

// Feature assembly, sequence windowing and walk-forward forecasting.
//
// Row t of a feature table holds, for trading day t:
//   log_returns        r_t
//   lagged_volatility  vol_{t-1}
//   garch_forecast     GARCH sigma forecast for day t from returns through t-1
//   vix_close          VIX close on day t
// and the target vol_t (rolling standard deviation of r over the window
// ending at t). Sample i of a windowed dataset reads rows [i, i+L) and
// targets vol at row i+L, so a prediction for day d only sees data up to d-1.
//
// Walk-forward windows index samples. Window w tests samples
// [s0 + w*stride, s0 + (w+1)*stride) with s0 = initial_train + initial_val;
// validation is always the initial_val samples before the test block and
// training is everything before that.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "volfc/garch.hpp"
#include "volfc/io.hpp"
#include "volfc/neural.hpp"
#include "volfc/scaler.hpp"
#include "volfc/timeseries.hpp"

namespace volfc::pipeline {

enum class ModelVariant { kGarch, kLstm, kLstmGarch, kLstmGarchVix };

inline constexpr std::array<ModelVariant, 4> kAllVariants{ModelVariant::kGarch, ModelVariant::kLstm,
                                                          ModelVariant::kLstmGarch, ModelVariant::kLstmGarchVix};

inline const char* to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::kGarch: return "GARCH";
    case ModelVariant::kLstm: return "LSTM";
    case ModelVariant::kLstmGarch: return "LSTM_GARCH";
    case ModelVariant::kLstmGarchVix: return "LSTM_GARCH_VIX";
  }
  return "?";
}

inline ModelVariant parse_variant(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (char& c : s)
    if (c == '-') c = '_';
  for (auto v : kAllVariants)
    if (s == to_string(v)) return v;
  throw UsageError("unknown model variant '" + s + "' (expected GARCH|LSTM|LSTM_GARCH|LSTM_GARCH_VIX)");
}

inline bool needs_garch(ModelVariant v) { return v != ModelVariant::kLstm; }
inline bool needs_vix(ModelVariant v) { return v == ModelVariant::kLstmGarchVix; }

inline std::string returns_column(ReturnKind k) { return k == ReturnKind::kLog ? "log_returns" : "pct_returns"; }

/// Network input columns per variant. GARCH takes no network inputs.
inline std::vector<std::string> variant_features(ModelVariant v, ReturnKind k = ReturnKind::kLog) {
  switch (v) {
    case ModelVariant::kGarch: return {};
    case ModelVariant::kLstm: return {returns_column(k), "lagged_volatility"};
    case ModelVariant::kLstmGarch: return {returns_column(k), "lagged_volatility", "garch_forecast"};
    case ModelVariant::kLstmGarchVix: return {returns_column(k), "lagged_volatility", "garch_forecast", "vix_close"};
  }
  return {};
}

/// Dated series of one-step GARCH sigma forecasts (raw return units).
struct GarchForecasts {
  std::vector<Date> dates;
  std::vector<double> values;
  int p = 0;
  int q = 0;
  std::size_t refits = 0;
};

struct GarchWalkConfig {
  std::size_t selection_rows = 504;  // returns used for order selection and the first fit
  int p_max = 4;
  int q_max = 4;
  std::size_t refit_stride = 1;  // refit every this many forecasts
  garch::FitOptions fit{};
};

/// One-step GARCH forecasts for every return date after the first
/// `selection_rows`. The order is chosen once by AIC on the initial segment;
/// the model is then refitted on the expanding history every `refit_stride`
/// days, each refit starting from the previous estimate. The forecast for
/// day t uses returns strictly before t.
inline GarchForecasts garch_walk_forward(const ReturnSeries& r, const GarchWalkConfig& cfg) {
  const std::size_t n = r.size();
  if (cfg.refit_stride < 1) throw UsageError("garch walk-forward: refit stride must be >= 1");
  if (cfg.selection_rows < 50 || cfg.selection_rows >= n)
    throw DataError("garch walk-forward: need more than " + std::to_string(cfg.selection_rows) + " returns");
  const std::span<const double> all(r.values);
  garch::GarchFit current =
      garch::select_order(all.first(cfg.selection_rows), cfg.p_max, cfg.q_max, cfg.fit, nullptr, 1);
  GarchForecasts out;
  out.p = current.p;
  out.q = current.q;
  bool first = true;
  std::vector<double> scaled;
  for (std::size_t t0 = cfg.selection_rows; t0 < n; t0 += cfg.refit_stride) {
    const auto hist = all.first(t0);
    if (!first) {
      garch::FitOptions o = cfg.fit;
      o.start = current.params;
      current = garch::fit(hist, out.p, out.q, o);
    }
    first = false;
    ++out.refits;
    const std::size_t t1 = std::min(n, t0 + cfg.refit_stride);
    // sigma^2_t for t < t1 depends on returns before t only; the pre-sample
    // seed comes from the fitted history.
    scaled.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(t1));
    for (double& v : scaled) v *= current.scale;
    std::vector<double> hs(scaled.begin(), scaled.begin() + static_cast<std::ptrdiff_t>(t0));
    const double seed = garch::presample_variance(hs, current.params.mean);
    const auto s2 = garch::conditional_variance(current.params, scaled, seed);
    for (std::size_t t = t0; t < t1; ++t) {
      out.dates.push_back(r.dates[t]);
      out.values.push_back(std::sqrt(s2[t]) / current.scale);
    }
  }
  return out;
}

/// Joined, dated feature table.
struct FeatureTable {
  std::vector<Date> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd x;            // rows x features
  std::vector<double> target;   // rolling volatility on each row's date
  std::vector<double> garch;    // GARCH forecast per row when available
  std::vector<char> gap_before; // 1 when the join dropped trading days before this row

  std::size_t rows() const { return dates.size(); }

  Eigen::Index column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<Eigen::Index>(j);
    throw DataError("feature table: no column '" + name + "'");
  }

  /// Copy keeping only `cols`, in that order.
  FeatureTable select(const std::vector<std::string>& cols) const {
    FeatureTable t = *this;
    t.names = cols;
    t.x.resize(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) t.x.col(static_cast<Eigen::Index>(j)) = x.col(column(cols[j]));
    return t;
  }
};

struct FeatureOptions {
  ReturnKind return_kind = ReturnKind::kLog;
  int vol_window = 22;
  double annualization = 1.0;
};

/// Inner-joins returns, lagged volatility and whichever optional inputs are
/// given. The target column is the same-day rolling volatility.
inline FeatureTable build_table(const PriceSeries& sp500, const PriceSeries* vix, const GarchForecasts* garch,
                                const FeatureOptions& opt = {}) {
  const ReturnSeries r = returns(sp500, opt.return_kind);
  const VolatilitySeries vol = rolling_volatility(r, opt.vol_window, opt.annualization);
  const VolatilitySeries lagged = lag(vol, 1);

  std::vector<std::pair<const std::vector<Date>*, const std::vector<double>*>> inputs{
      {&r.dates, &r.values}, {&lagged.dates, &lagged.values}, {&vol.dates, &vol.values}};
  std::vector<std::string> names{returns_column(opt.return_kind), "lagged_volatility"};
  if (garch) {
    inputs.emplace_back(&garch->dates, &garch->values);
    names.push_back("garch_forecast");
  }
  if (vix) {
    inputs.emplace_back(&vix->dates(), &vix->close());
    names.push_back("vix_close");
  }
  const JoinedColumns j = inner_join(inputs);
  if (j.dates.empty()) throw DataError("build_features: the inputs share no dates");

  FeatureTable t;
  t.dates = j.dates;
  t.names = names;
  const auto n = static_cast<Eigen::Index>(j.dates.size());
  t.x.resize(n, static_cast<Eigen::Index>(names.size()));
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < inputs.size(); ++c) {
    if (c == 2) continue;
    for (Eigen::Index i = 0; i < n; ++i) t.x(i, col) = j.columns[c][static_cast<std::size_t>(i)];
    ++col;
  }
  t.target = j.columns[2];
  if (garch) t.garch = j.columns[3];

  // A row follows a gap when the trading day before it (in the return
  // calendar) is missing from the join.
  t.gap_before.assign(j.dates.size(), 0);
  std::size_t pos = 0;
  std::size_t prev_pos = 0;
  for (std::size_t i = 0; i < j.dates.size(); ++i) {
    while (r.dates[pos] < j.dates[i]) ++pos;
    if (i > 0 && pos != prev_pos + 1) t.gap_before[i] = 1;
    prev_pos = pos;
  }
  return t;
}

/// Feature table for one variant. Fails before any work when an input the
/// variant needs is missing.
inline FeatureTable build_features(ModelVariant v, const PriceSeries& sp500, const PriceSeries* vix,
                                   const GarchForecasts* garch, const FeatureOptions& opt = {}) {
  if (needs_garch(v) && !garch)
    throw DataError(std::string("build_features: variant ") + to_string(v) + " needs GARCH forecasts");
  if (needs_vix(v) && !vix) throw DataError(std::string("build_features: variant ") + to_string(v) + " needs VIX data");
  FeatureTable full = build_table(sp500, needs_vix(v) ? vix : nullptr, needs_garch(v) ? garch : nullptr, opt);
  return full.select(variant_features(v, opt.return_kind));
}

struct WindowedDataset {
  FeatureTable table;
  int lookback = 0;
  std::vector<std::size_t> target_rows;  // table row of each sample's target
  std::vector<double> targets;
  std::vector<Date> dates;               // target dates
  std::vector<double> garch;             // GARCH forecast for each target date, when present

  std::size_t size() const { return target_rows.size(); }

  /// Raw (unscaled) window of sample i.
  nn::Sequence sequence(std::size_t i) const {
    return table.x.middleRows(static_cast<Eigen::Index>(target_rows[i]) - lookback, lookback);
  }
};

/// Sample i uses rows [i, i+lookback) and targets row i+lookback. Windows
/// that would straddle a join gap are skipped.
inline WindowedDataset make_sequences(const FeatureTable& table, int lookback) {
  if (lookback < 1) throw UsageError("make_sequences: lookback must be >= 1");
  if (table.rows() <= static_cast<std::size_t>(lookback))
    throw DataError("make_sequences: need more than " + std::to_string(lookback) + " rows, have " +
                    std::to_string(table.rows()));
  WindowedDataset d;
  d.table = table;
  d.lookback = lookback;
  std::size_t last_gap = 0;  // latest row index with gap_before set
  for (std::size_t row = 0; row < table.rows(); ++row) {
    if (!table.gap_before.empty() && table.gap_before[row]) last_gap = row;
    if (row < static_cast<std::size_t>(lookback)) continue;
    if (last_gap > row - static_cast<std::size_t>(lookback)) continue;
    d.target_rows.push_back(row);
    d.targets.push_back(table.target[row]);
    d.dates.push_back(table.dates[row]);
    if (!table.garch.empty()) d.garch.push_back(table.garch[row]);
  }
  if (d.target_rows.empty()) throw DataError("make_sequences: no gap-free window available");
  return d;
}

struct WalkForwardConfig {
  std::size_t initial_train = 3024;
  std::size_t initial_val = 756;
  std::size_t refit_stride = 252;
  int horizon = 1;

  void validate() const {
    if (initial_train < 1 || initial_val < 1 || refit_stride < 1)
      throw UsageError("walk-forward: train, validation and stride must be positive");
    if (horizon != 1) throw UsageError("walk-forward: only one-step horizons are supported");
  }
};

struct Prediction {
  Date date;
  double actual = 0.0;
  double prediction = 0.0;
  int window = 0;
};

struct WindowInfo {
  int index = 0;
  std::size_t train_end = 0;  // samples [0, train_end) train
  std::size_t val_end = 0;    // samples [train_end, val_end) validate
  std::size_t test_end = 0;   // samples [val_end, test_end) test
  std::optional<MinMaxScaler> feature_scaler;
  std::optional<MinMaxScaler> target_scaler;
  nn::TrainHistory history;
};

struct WalkForwardRun {
  ModelVariant variant = ModelVariant::kLstm;
  std::uint64_t seed = 0;
  std::vector<Prediction> predictions;
  std::vector<WindowInfo> windows;
  bool final_window_truncated = false;
  std::optional<nn::LstmNetwork> final_network;

  std::vector<double> actuals() const {
    std::vector<double> v;
    for (const auto& p : predictions) v.push_back(p.actual);
    return v;
  }
  std::vector<double> forecasts() const {
    std::vector<double> v;
    for (const auto& p : predictions) v.push_back(p.prediction);
    return v;
  }
  std::vector<Date> dates() const {
    std::vector<Date> v;
    for (const auto& p : predictions) v.push_back(p.date);
    return v;
  }
};

/// Test-block boundaries [begin, end) in sample indices.
inline std::vector<std::pair<std::size_t, std::size_t>> plan_windows(std::size_t samples, const WalkForwardConfig& wf) {
  wf.validate();
  const std::size_t s0 = wf.initial_train + wf.initial_val;
  if (samples < s0 + 1)
    throw DataError("walk-forward: need at least " + std::to_string(s0 + 1) + " samples, have " +
                    std::to_string(samples));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = s0; b < samples; b += wf.refit_stride) out.emplace_back(b, std::min(samples, b + wf.refit_stride));
  return out;
}

/// Scaled copy of sample windows [begin, end).
inline nn::Dataset scaled_samples(const WindowedDataset& d, const Eigen::MatrixXd& xs, const MinMaxScaler& ys,
                                  std::size_t begin, std::size_t end) {
  nn::Dataset out;
  out.x.reserve(end - begin);
  out.y.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.x.emplace_back(xs.middleRows(static_cast<Eigen::Index>(d.target_rows[i]) - d.lookback, d.lookback));
    out.y.push_back(ys.transform_value(0, d.targets[i]));
  }
  return out;
}

/// Feature and target scalers fitted on the table rows that belong to
/// training samples [0, train_end).
inline std::pair<MinMaxScaler, MinMaxScaler> fit_scalers(const WindowedDataset& data, std::size_t train_end) {
  const auto fit_rows = static_cast<Eigen::Index>(data.target_rows[train_end - 1] + 1);
  Eigen::MatrixXd tcol(fit_rows, 1);
  for (Eigen::Index i = 0; i < fit_rows; ++i) tcol(i, 0) = data.table.target[static_cast<std::size_t>(i)];
  return {MinMaxScaler::fit(data.table.x.topRows(fit_rows)), MinMaxScaler::fit(tcol)};
}

/// Scaled training and validation sets of the first walk-forward window,
/// as used for hyperparameter search.
inline std::pair<nn::Dataset, nn::Dataset> first_window_sets(const WindowedDataset& data, const WalkForwardConfig& wf) {
  const auto blocks = plan_windows(data.size(), wf);
  const std::size_t val_end = blocks.front().first;
  const std::size_t train_end = val_end - wf.initial_val;
  const auto [xs, ys] = fit_scalers(data, train_end);
  const Eigen::MatrixXd x_scaled = xs.transform(data.table.x);
  return {scaled_samples(data, x_scaled, ys, 0, train_end), scaled_samples(data, x_scaled, ys, train_end, val_end)};
}

/// Seed of the training run in window w.
inline std::uint64_t window_seed(std::uint64_t seed, int w) {
  return nn::splitmix64(seed + 0x9e37ULL * static_cast<std::uint64_t>(w + 1));
}

/// Walk-forward forecasting for one variant. The network is trained afresh
/// in the first window and warm-started from the previous window afterwards.
inline WalkForwardRun walk_forward(ModelVariant variant, const WindowedDataset& data, const WalkForwardConfig& wf,
                                   const nn::NetworkConfig& net_config, std::uint64_t seed) {
  const auto blocks = plan_windows(data.size(), wf);
  WalkForwardRun run;
  run.variant = variant;
  run.seed = seed;
  run.final_window_truncated = blocks.back().second - blocks.back().first < wf.refit_stride;

  if (variant == ModelVariant::kGarch) {
    if (data.garch.size() != data.size()) throw DataError("walk-forward: GARCH variant needs the garch_forecast column");
    for (std::size_t w = 0; w < blocks.size(); ++w) {
      WindowInfo info;
      info.index = static_cast<int>(w);
      info.val_end = blocks[w].first;
      info.train_end = info.val_end - wf.initial_val;
      info.test_end = blocks[w].second;
      for (std::size_t i = blocks[w].first; i < blocks[w].second; ++i)
        run.predictions.push_back({data.dates[i], data.targets[i], data.garch[i], info.index});
      run.windows.push_back(std::move(info));
    }
    return run;
  }

  const auto expected = variant_features(variant);
  if (static_cast<std::size_t>(data.table.x.cols()) != expected.size())
    throw DataError(std::string("walk-forward: variant ") + to_string(variant) + " expects " +
                    std::to_string(expected.size()) + " feature columns");

  nn::NetworkConfig cfg = net_config;
  cfg.seed = seed;
  std::optional<nn::LstmNetwork> net;
  for (std::size_t w = 0; w < blocks.size(); ++w) {
    WindowInfo info;
    info.index = static_cast<int>(w);
    info.val_end = blocks[w].first;
    info.train_end = info.val_end - wf.initial_val;
    info.test_end = blocks[w].second;

    // Scalers see only rows that belong to the training samples.
    const auto [xs, ys] = fit_scalers(data, info.train_end);
    const Eigen::MatrixXd x_scaled = xs.transform(data.table.x);

    const nn::Dataset train_set = scaled_samples(data, x_scaled, ys, 0, info.train_end);
    const nn::Dataset val_set = scaled_samples(data, x_scaled, ys, info.train_end, info.val_end);
    const nn::Dataset test_set = scaled_samples(data, x_scaled, ys, info.val_end, info.test_end);

    if (!net) net = nn::make_network(cfg, static_cast<int>(data.table.x.cols()));
    net->mutable_config().seed = window_seed(seed, info.index);
    try {
      info.history = nn::train(*net, train_set, val_set);
    } catch (const NumericError& e) {
      throw NumericError("walk-forward window " + std::to_string(w) + ": " + e.what());
    }
    const Eigen::VectorXd yhat = nn::predict(*net, test_set.x);
    for (std::size_t k = 0; k < test_set.size(); ++k) {
      const std::size_t i = info.val_end + k;
      run.predictions.push_back({data.dates[i], data.targets[i], ys.inverse_value(0, yhat[static_cast<Eigen::Index>(k)]),
                                 info.index});
    }
    info.feature_scaler = xs;
    info.target_scaler = ys;
    run.windows.push_back(std::move(info));
  }
  run.final_network = std::move(net);
  return run;
}

// ---------------------------------------------------------------------------
// All variants on one snapshot

struct PipelineConfig {
  FeatureOptions features{};
  int lookback = 22;
  WalkForwardConfig wf{};
  nn::NetworkConfig net{};
  GarchWalkConfig garch{};
};

struct MarketData {
  PriceSeries sp500;
  std::optional<PriceSeries> vix;
};

struct VariantOutcome {
  std::optional<WalkForwardRun> run;
  std::string error;  // empty on success
  int exit_code = 0;
};

inline std::uint64_t variant_seed(std::uint64_t master, ModelVariant v) {
  return nn::splitmix64(master ^ (0xA5A5ULL + static_cast<std::uint64_t>(v)));
}

/// GARCH forecasts from log returns. The return kind of the network inputs
/// does not change the econometric model.
inline GarchForecasts garch_feature(const PriceSeries& sp500, const PipelineConfig& cfg) {
  return garch_walk_forward(log_returns(sp500), cfg.garch);
}

/// Table joining every input any of `variants` needs, so all of them share
/// one date vector.
inline FeatureTable shared_table(const std::vector<ModelVariant>& variants, const MarketData& data,
                                 const PipelineConfig& cfg, const GarchForecasts* garch) {
  bool any_garch = false, any_vix = false;
  for (auto v : variants) {
    any_garch = any_garch || needs_garch(v);
    any_vix = any_vix || needs_vix(v);
  }
  if (any_garch && !garch) throw DataError("shared_table: GARCH forecasts required");
  if (any_vix && !data.vix) throw DataError("shared_table: VIX data required");
  return build_table(data.sp500, any_vix ? &*data.vix : nullptr, any_garch ? garch : nullptr, cfg.features);
}

/// Runs every requested variant on one shared table so all runs carry the
/// same test dates. A variant whose inputs are missing is reported and
/// skipped; the rest still run. `threads` > 1 runs variants concurrently.
inline std::map<ModelVariant, VariantOutcome> run_all(const std::vector<ModelVariant>& variants,
                                                      const MarketData& data, const PipelineConfig& cfg,
                                                      std::uint64_t seed, unsigned threads = 1,
                                                      const GarchForecasts* precomputed = nullptr) {
  std::map<ModelVariant, VariantOutcome> out;
  std::vector<ModelVariant> runnable;
  bool any_garch = false;
  for (auto v : variants) {
    if (needs_vix(v) && !data.vix) {
      out[v].error = std::string("variant ") + to_string(v) + " needs VIX data, none supplied";
      out[v].exit_code = 2;
      continue;
    }
    runnable.push_back(v);
    any_garch = any_garch || needs_garch(v);
  }
  if (runnable.empty()) return out;

  std::optional<GarchForecasts> g;
  if (any_garch) g = precomputed ? *precomputed : garch_feature(data.sp500, cfg);
  const FeatureTable full = shared_table(runnable, data, cfg, g ? &*g : nullptr);

  auto run_one = [&](ModelVariant v) {
    VariantOutcome o;
    try {
      const FeatureTable t = full.select(variant_features(v, cfg.features.return_kind));
      WindowedDataset d = make_sequences(t, cfg.lookback);
      // Keep the GARCH column for the GARCH variant even though it has no
      // network inputs.
      if (v == ModelVariant::kGarch && d.garch.empty()) throw DataError("run_all: GARCH forecasts missing");
      o.run = walk_forward(v, d, cfg.wf, cfg.net, variant_seed(seed, v));
    } catch (const Error& e) {
      o.error = e.what();
      o.exit_code = e.exit_code();
    }
    return o;
  };

  std::vector<VariantOutcome> results(runnable.size());
  if (threads <= 1 || runnable.size() == 1) {
    for (std::size_t i = 0; i < runnable.size(); ++i) results[i] = run_one(runnable[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(threads, runnable.size()); ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < runnable.size();) results[i] = run_one(runnable[i]);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < runnable.size(); ++i) out[runnable[i]] = std::move(results[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string predictions_csv(const WalkForwardRun& run) {
  std::ostringstream o;
  o << "date,actual,prediction,window_index\n";
  for (const auto& p : run.predictions)
    o << p.date.iso() << ',' << io::format_double(p.actual) << ',' << io::format_double(p.prediction) << ','
      << p.window << "\n";
  return o.str();
}

/// Reads a predictions CSV written by predictions_csv.
inline WalkForwardRun read_predictions_csv(std::string_view text, ModelVariant variant = ModelVariant::kLstm) {
  WalkForwardRun run;
  run.variant = variant;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("predictions csv: empty file");
  const auto header = io::split_csv_line(line);
  if (header.size() < 3 || io::trim(header[0]) != "date") throw DataError("predictions csv: unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() < 3) throw DataError("predictions csv: short row at line " + std::to_string(lineno));
    Prediction p;
    p.date = Date::parse(io::trim(f[0]));
    const auto a = io::parse_double(io::trim(f[1]));
    const auto b = io::parse_double(io::trim(f[2]));
    if (!a || !b) throw DataError("predictions csv: bad number at line " + std::to_string(lineno));
    p.actual = *a;
    p.prediction = *b;
    if (f.size() > 3) {
      const auto w = io::parse_double(io::trim(f[3]));
      p.window = w ? static_cast<int>(*w) : 0;
    }
    if (!run.predictions.empty() && !(run.predictions.back().date < p.date))
      throw DataError("predictions csv: dates not strictly increasing at line " + std::to_string(lineno));
    run.predictions.push_back(p);
  }
  if (run.predictions.empty()) throw DataError("predictions csv: no rows");
  return run;
}

inline void describe(const PipelineConfig& c, io::KeyValue& kv) {
  kv.set("data.return_kind", to_string(c.features.return_kind));
  kv.set("data.vol_window", static_cast<long long>(c.features.vol_window));
  kv.set("data.annualization", c.features.annualization);
  kv.set("data.lookback", static_cast<long long>(c.lookback));
  kv.set("walkforward.initial_train", static_cast<long long>(c.wf.initial_train));
  kv.set("walkforward.initial_val", static_cast<long long>(c.wf.initial_val));
  kv.set("walkforward.refit_stride", static_cast<long long>(c.wf.refit_stride));
  kv.set("garch.selection_rows", static_cast<long long>(c.garch.selection_rows));
  kv.set("garch.p_max", static_cast<long long>(c.garch.p_max));
  kv.set("garch.q_max", static_cast<long long>(c.garch.q_max));
  kv.set("garch.refit_stride", static_cast<long long>(c.garch.refit_stride));
}

/// Run summary for the manifest.
inline void describe(const WalkForwardRun& run, io::KeyValue& kv, const std::string& prefix) {
  kv.set(prefix + "variant", to_string(run.variant));
  kv.set(prefix + "seed", std::to_string(run.seed));
  kv.set(prefix + "predictions", static_cast<long long>(run.predictions.size()));
  kv.set(prefix + "windows", static_cast<long long>(run.windows.size()));
  kv.set(prefix + "final_window_truncated", run.final_window_truncated);
  if (!run.predictions.empty()) {
    kv.set(prefix + "first_date", run.predictions.front().date.iso());
    kv.set(prefix + "last_date", run.predictions.back().date.iso());
  }
  for (const auto& w : run.windows) {
    const std::string p = prefix + "window" + std::to_string(w.index) + ".";
    kv.set(p + "train_end", static_cast<long long>(w.train_end));
    kv.set(p + "val_end", static_cast<long long>(w.val_end));
    kv.set(p + "test_end", static_cast<long long>(w.test_end));
    if (w.feature_scaler) {
      w.feature_scaler->to_kv(kv, p + "feature_scaler.");
      w.target_scaler->to_kv(kv, p + "target_scaler.");
      kv.set(p + "epochs", static_cast<long long>(w.history.epochs.size()));
      kv.set(p + "best_epoch", static_cast<long long>(w.history.best_epoch + 1));
      kv.set(p + "best_val_loss", w.history.best_val_loss);
    }
  }
}

}  // namespace volfc::pipeline
