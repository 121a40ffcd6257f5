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

// Local surrogate explanations for sequence models.
//
// A lookback x features window is flattened into named cells ("t21
// lagged_volatility" is the newest row of lookback 22). Each cell is
// discretized into training quartiles; perturbations redraw cells bin by bin,
// the black box scores them, and a weighted ridge model over bin-match
// indicators ranks the conditions that drive the prediction.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "volfc/common.hpp"
#include "volfc/io.hpp"
#include "volfc/timeseries.hpp"

namespace volfc::explain {

struct FlatWindow {
  std::vector<std::string> names;
  Eigen::VectorXd values;
};

inline std::string cell_name(int offset, const std::string& feature) {
  return "t" + std::to_string(offset) + " " + feature;
}

/// Row-major flattening: cell (t, f) lands at t * features + f.
inline FlatWindow flatten(const Eigen::MatrixXd& window, const std::vector<std::string>& features) {
  if (window.size() == 0) throw DataError("flatten: empty window");
  if (static_cast<Eigen::Index>(features.size()) != window.cols())
    throw DataError("flatten: feature names do not match the window width");
  FlatWindow f;
  f.values.resize(window.size());
  for (Eigen::Index t = 0; t < window.rows(); ++t)
    for (Eigen::Index j = 0; j < window.cols(); ++j) {
      f.names.push_back(cell_name(static_cast<int>(t), features[static_cast<std::size_t>(j)]));
      f.values[t * window.cols() + j] = window(t, j);
    }
  return f;
}

inline Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat, Eigen::Index lookback, Eigen::Index features) {
  if (flat.size() != lookback * features) throw DataError("unflatten: size mismatch");
  Eigen::MatrixXd w(lookback, features);
  for (Eigen::Index t = 0; t < lookback; ++t)
    for (Eigen::Index j = 0; j < features; ++j) w(t, j) = flat[t * features + j];
  return w;
}

struct CellBins {
  double min = 0.0;
  std::array<double, 3> cut{};  // quartile boundaries
  double max = 0.0;
  bool informative = true;      // false when the cell never varies in training

  /// 0..3; values on a boundary go to the lower bin.
  int bin(double v) const {
    int k = 0;
    while (k < 3 && v > cut[static_cast<std::size_t>(k)]) ++k;
    return k;
  }
  double lower(int k) const { return k == 0 ? min : cut[static_cast<std::size_t>(k - 1)]; }
  double upper(int k) const { return k == 3 ? max : cut[static_cast<std::size_t>(k)]; }
};

/// Quartile bins of every flattened cell over the training windows.
inline std::vector<CellBins> discretize_stats(const std::vector<Eigen::MatrixXd>& windows) {
  if (windows.size() < 4) throw DataError("discretize_stats: need at least 4 training windows");
  const Eigen::Index cells = windows.front().size();
  const Eigen::Index F = windows.front().cols();
  std::vector<CellBins> out(static_cast<std::size_t>(cells));
  std::vector<double> col(windows.size());
  for (Eigen::Index c = 0; c < cells; ++c) {
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].size() != cells || windows[i].cols() != F) throw DataError("discretize_stats: inconsistent window shapes");
      col[i] = windows[i](c / F, c % F);
    }
    std::sort(col.begin(), col.end());
    CellBins& b = out[static_cast<std::size_t>(c)];
    b.min = col.front();
    b.max = col.back();
    b.cut = {quantile_sorted(col, 0.25), quantile_sorted(col, 0.5), quantile_sorted(col, 0.75)};
    b.informative = b.max > b.min;
  }
  return out;
}

struct Perturbation {
  Eigen::MatrixXd samples;  // n x cells, row 0 = the instance
  Eigen::MatrixXd binary;   // n x cells, 1 where the sample shares the instance's bin
};

/// Row 0 is x. Every other row draws a bin per cell uniformly; a cell keeps
/// x's value when the draw hits x's bin and otherwise takes a uniform value
/// inside the drawn bin's training range.
inline Perturbation perturb(const Eigen::VectorXd& x, const std::vector<CellBins>& bins, std::size_t n,
                            std::uint64_t seed) {
  if (n < 1) throw UsageError("perturb: need at least one sample");
  if (static_cast<std::size_t>(x.size()) != bins.size()) throw DataError("perturb: bins do not match the instance");
  const Eigen::Index cells = x.size();
  Perturbation p;
  p.samples.resize(static_cast<Eigen::Index>(n), cells);
  p.binary.resize(static_cast<Eigen::Index>(n), cells);
  p.samples.row(0) = x.transpose();
  p.binary.row(0).setOnes();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> own(static_cast<std::size_t>(cells));
  for (Eigen::Index c = 0; c < cells; ++c) own[static_cast<std::size_t>(c)] = bins[static_cast<std::size_t>(c)].bin(x[c]);
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index c = 0; c < cells; ++c) {
      const auto& b = bins[static_cast<std::size_t>(c)];
      const int k = pick(rng);
      const double u = unit(rng);
      if (k == own[static_cast<std::size_t>(c)]) {
        p.samples(i, c) = x[c];
        p.binary(i, c) = 1.0;
      } else {
        p.samples(i, c) = b.lower(k) + u * (b.upper(k) - b.lower(k));
        p.binary(i, c) = 0.0;
      }
    }
  }
  return p;
}

inline double kernel(double distance, double width) {
  if (!(distance >= 0.0)) throw UsageError("kernel: distance must be >= 0");
  if (!(width > 0.0)) throw UsageError("kernel: width must be > 0");
  return std::exp(-(distance * distance) / (width * width));
}

struct Surrogate {
  double intercept = 0.0;
  Eigen::VectorXd coef;               // one per cell, zero outside the selection
  std::vector<std::size_t> selected;  // cells kept, by decreasing |coef| of the preliminary fit
  double r2 = 0.0;                    // weighted, on the perturbation set
};

namespace detail {
// Weighted ridge on columns `cols` of z with an unpenalized intercept.
inline Eigen::VectorXd weighted_ridge(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                      const std::vector<std::size_t>& cols, double lambda, double& intercept) {
  const double sw = w.sum();
  const double ybar = w.dot(y) / sw;
  const auto k = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd zc(z.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto col = z.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
    zc.col(j) = col.array() - w.dot(col) / sw;
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    const Eigen::MatrixXd zw = zc.array().colwise() * w.array();
    Eigen::MatrixXd a = zw.transpose() * zc;
    a.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = zw.transpose() * (y.array() - ybar).matrix();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericError("fit_surrogate: singular system");
    beta = ldlt.solve(rhs);
    if (!beta.allFinite()) throw NumericError("fit_surrogate: singular system");
  }
  intercept = ybar;
  for (Eigen::Index j = 0; j < k; ++j)
    intercept -= beta[j] * (w.dot(z.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]))) / sw);
  return beta;
}
}  // namespace detail

/// Weighted L2-penalized least squares on the K cells with the largest
/// preliminary coefficients. Cells flagged in `exclude` never enter.
inline Surrogate fit_surrogate(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               std::size_t K, const std::vector<bool>& exclude = {}, double lambda = 1e-3) {
  if (z.rows() != y.size() || y.size() != w.size() || z.rows() == 0)
    throw DataError("fit_surrogate: matrix rows, outputs and weights must agree and be nonempty");
  const auto cells = static_cast<std::size_t>(z.cols());
  if (K < 1 || K > cells) throw UsageError("fit_surrogate: K must lie in [1, cells]");
  if (!(w.minCoeff() >= 0.0) || !(w.sum() > 0.0)) throw DataError("fit_surrogate: weights must be non-negative");

  Surrogate s;
  s.coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
  std::vector<std::size_t> usable;
  for (std::size_t c = 0; c < cells; ++c)
    if (exclude.empty() || !exclude[c]) usable.push_back(c);

  const bool flat = (y.array() == y[0]).all();
  double b0 = 0.0;
  Eigen::VectorXd pre = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
  if (!flat) {
    const Eigen::VectorXd beta = detail::weighted_ridge(z, y, w, usable, lambda, b0);
    for (std::size_t j = 0; j < usable.size(); ++j) pre[static_cast<Eigen::Index>(usable[j])] = beta[static_cast<Eigen::Index>(j)];
  }
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(pre[static_cast<Eigen::Index>(a)]) > std::abs(pre[static_cast<Eigen::Index>(b)]);
  });
  s.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K));

  if (flat) {
    s.intercept = y[0];
    s.r2 = 1.0;
    return s;
  }
  std::vector<std::size_t> fit_cols;
  for (auto c : s.selected)
    if (exclude.empty() || !exclude[c]) fit_cols.push_back(c);
  const Eigen::VectorXd beta = detail::weighted_ridge(z, y, w, fit_cols, lambda, s.intercept);
  for (std::size_t j = 0; j < fit_cols.size(); ++j) s.coef[static_cast<Eigen::Index>(fit_cols[j])] = beta[static_cast<Eigen::Index>(j)];

  const Eigen::VectorXd yhat = (z * s.coef).array() + s.intercept;
  const double ybar = w.dot(y) / w.sum();
  const double ss_res = (w.array() * (y - yhat).array().square()).sum();
  const double ss_tot = (w.array() * (y.array() - ybar).square()).sum();
  s.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return s;
}

struct ExplainerConfig {
  std::size_t num_samples = 5000;
  double kernel_width = 0.0;  // <= 0 selects 0.75 * sqrt(cells)
  std::size_t num_features = 10;
  std::uint64_t seed = 42;
};

struct Condition {
  std::string text;  // e.g. "0.0051 < t21 lagged_volatility <= 0.0062"
  double weight = 0.0;
  std::size_t cell = 0;
};

struct Explanation {
  double predicted_value = 0.0;
  double range_min = 0.0;
  double range_max = 0.0;
  std::vector<Condition> conditions;  // ranked by |weight|
  std::vector<std::pair<std::string, double>> feature_values;  // instance values of the reported cells
  double intercept = 0.0;
  double r2 = 0.0;
  double kernel_width = 0.0;
  std::size_t num_samples = 0;
};

/// Interval predicate describing the bin that holds `v`.
inline std::string condition_text(const std::string& name, const CellBins& b, double v) {
  if (!b.informative) return name + " = " + io::format_double(b.min);
  char lo[32], hi[32];
  const int k = b.bin(v);
  std::snprintf(lo, sizeof lo, "%.4g", b.lower(k));
  std::snprintf(hi, sizeof hi, "%.4g", b.upper(k));
  if (k == 0) return name + " <= " + hi;
  if (k == 3) return name + " > " + lo;
  return std::string(lo) + " < " + name + " <= " + hi;
}

using Predictor = std::function<double(const Eigen::MatrixXd&)>;

/// Explains `model` at `window`. The model receives raw windows, so it must
/// carry its own scaling.
inline Explanation explain_instance(const Predictor& model, const Eigen::MatrixXd& window,
                                    const std::vector<std::string>& features, const std::vector<CellBins>& bins,
                                    const ExplainerConfig& cfg) {
  const FlatWindow flat = flatten(window, features);
  const std::size_t cells = flat.names.size();
  if (cfg.num_samples < 10) throw UsageError("explain: num_samples must be >= 10");
  if (cfg.num_features < 1 || cfg.num_features > cells) throw UsageError("explain: num_features must lie in [1, cells]");
  const double width = cfg.kernel_width > 0.0 ? cfg.kernel_width : 0.75 * std::sqrt(static_cast<double>(cells));

  const Perturbation p = perturb(flat.values, bins, cfg.num_samples, cfg.seed);
  const auto n = static_cast<Eigen::Index>(cfg.num_samples);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      y[i] = model(unflatten(p.samples.row(i).transpose(), window.rows(), window.cols()));
    } catch (const Error& e) {
      throw NumericError("explain: model failed on perturbation sample " + std::to_string(i) + ": " + e.what());
    }
    if (!std::isfinite(y[i])) throw NumericError("explain: model returned a non-finite value on sample " + std::to_string(i));
    const double d = std::sqrt(static_cast<double>(cells) - p.binary.row(i).sum());
    w[i] = kernel(d, width);
  }
  std::vector<bool> exclude(cells);
  for (std::size_t c = 0; c < cells; ++c) exclude[c] = !bins[c].informative;
  const Surrogate s = fit_surrogate(p.binary, y, w, cfg.num_features, exclude);

  Explanation e;
  e.predicted_value = y[0];
  e.range_min = y.minCoeff();
  e.range_max = y.maxCoeff();
  e.intercept = s.intercept;
  e.r2 = s.r2;
  e.kernel_width = width;
  e.num_samples = cfg.num_samples;
  std::vector<std::size_t> ranked = s.selected;
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(s.coef[static_cast<Eigen::Index>(a)]) > std::abs(s.coef[static_cast<Eigen::Index>(b)]);
  });
  for (auto c : ranked) {
    const double v = flat.values[static_cast<Eigen::Index>(c)];
    e.conditions.push_back({condition_text(flat.names[c], bins[c], v), s.coef[static_cast<Eigen::Index>(c)], c});
    e.feature_values.emplace_back(flat.names[c], v);
  }
  return e;
}

/// Three sections: predicted value with local range and surrogate fit,
/// signed conditions, instance values of the reported cells.
inline std::string report(const Explanation& e) {
  std::ostringstream o;
  o << "[predicted value]\n";
  o << "value," << io::format_double(e.predicted_value) << "\n";
  o << "min," << io::format_double(e.range_min) << "\n";
  o << "max," << io::format_double(e.range_max) << "\n";
  o << "intercept," << io::format_double(e.intercept) << "\n";
  o << "weighted_r2," << io::format_double(e.r2) << "\n";
  o << "kernel_width," << io::format_double(e.kernel_width) << "\n";
  o << "samples," << e.num_samples << "\n";
  o << "\n[negative and positive]\n";
  o << "condition,weight,side\n";
  for (const auto& c : e.conditions)
    o << '"' << c.text << "\"," << io::format_double(c.weight) << ','
      << (c.weight > 0.0 ? "positive" : c.weight < 0.0 ? "negative" : "none") << "\n";
  o << "\n[feature values]\n";
  o << "feature,value\n";
  for (const auto& [name, v] : e.feature_values) o << name << ',' << io::format_double(v) << "\n";
  return o.str();
}

}  // namespace volfc::explain
