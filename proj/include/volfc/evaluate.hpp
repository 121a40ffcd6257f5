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

// Forecast error metrics and model comparison statistics.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "volfc/common.hpp"
#include "volfc/io.hpp"
#include "volfc/timeseries.hpp"

namespace volfc::eval {

namespace detail {
inline void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty() || a.size() != b.size())
    throw DataError(std::string(what) + ": inputs must be nonempty and of equal length");
}
}  // namespace detail

inline double mae(std::span<const double> preds, std::span<const double> actuals) {
  detail::check_pair(preds, actuals, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - actuals[i]);
  return s / static_cast<double>(preds.size());
}

inline double rmse(std::span<const double> preds, std::span<const double> actuals) {
  detail::check_pair(preds, actuals, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - actuals[i]) * (preds[i] - actuals[i]);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

inline std::vector<double> absolute_errors(std::span<const double> preds, std::span<const double> actuals) {
  detail::check_pair(preds, actuals, "absolute_errors");
  std::vector<double> e(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) e[i] = std::abs(preds[i] - actuals[i]);
  return e;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

enum class PValueMethod { kAuto, kNormal, kExact };

struct TestResult {
  double u = 0.0;  // U of the first sample: pairs (a > b) plus half the ties
  double z = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n = 0;
  std::size_t m = 0;
  bool exact = false;
};

/// Midranks (1-based) of `x`.
inline std::vector<double> midranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

namespace detail {
// Exact two-sided p under the permutation distribution of the pooled
// midranks: every n-subset is equally likely to be the first sample.
inline double exact_p(const std::vector<double>& ranks, std::size_t n, double u_obs) {
  const std::size_t N = ranks.size();
  const double mid = static_cast<double>(n) * static_cast<double>(N - n) / 2.0;
  const double dev = std::abs(u_obs - mid) - 1e-9;
  const double offset = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  double hits = 0.0, total = 0.0;
  for (;;) {
    double rs = 0.0;
    for (auto k : pick) rs += ranks[k];
    total += 1.0;
    if (std::abs(rs - offset - mid) >= dev) hits += 1.0;
    // next combination
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == N - n + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return std::min(1.0, hits / total);
}
}  // namespace detail

/// Two-sided rank-sum test. kAuto enumerates exactly when n*m <= 64 and
/// otherwise uses the tie-corrected normal approximation with continuity
/// correction.
inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 PValueMethod method = PValueMethod::kAuto) {
  if (a.empty() || b.empty()) throw DataError("mann_whitney_u: both samples must be nonempty");
  TestResult res;
  res.n = a.size();
  res.m = b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double n = static_cast<double>(res.n), m = static_cast<double>(res.m), N = n + m;
  double ra = 0.0;
  for (std::size_t i = 0; i < res.n; ++i) ra += ranks[i];
  res.u = ra - n * (n + 1.0) / 2.0;

  // tie correction
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double var = n * m / 12.0 * ((N + 1.0) - ties / (N * (N - 1.0 > 0.0 ? N - 1.0 : 1.0)));
  const double mu = n * m / 2.0;
  if (var > 0.0) {
    const double dev = std::max(0.0, std::abs(res.u - mu) - 0.5);
    res.z = (res.u > mu ? 1.0 : -1.0) * dev / std::sqrt(var);
  }
  const bool exact = method == PValueMethod::kExact || (method == PValueMethod::kAuto && res.n * res.m <= 64);
  if (exact) {
    res.p = detail::exact_p(ranks, res.n, res.u);
    res.exact = true;
  } else {
    res.p = var > 0.0 ? std::min(1.0, std::erfc(std::abs(res.z) / std::sqrt(2.0))) : 1.0;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Segment metrics

struct SegmentMetrics {
  std::string segment;  // "full", "Q1".."Q4"
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  std::string variant;
  std::vector<SegmentMetrics> segments;

  const SegmentMetrics& at(const std::string& name) const {
    for (const auto& s : segments)
      if (s.segment == name) return s;
    throw DataError("metric report: no segment '" + name + "'");
  }
};

/// Quartile (0..3) of each actual: empirical quartiles of all actuals with
/// values on a boundary going to the lower quartile.
inline std::vector<int> quartile_labels(std::span<const double> actuals) {
  if (actuals.size() < 4) throw DataError("quartile_metrics: need at least 4 observations");
  std::vector<double> sorted(actuals.begin(), actuals.end());
  std::sort(sorted.begin(), sorted.end());
  const std::array<double, 3> cut{quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.5),
                                  quantile_sorted(sorted, 0.75)};
  std::vector<int> q(actuals.size());
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    int k = 0;
    while (k < 3 && actuals[i] > cut[static_cast<std::size_t>(k)]) ++k;
    q[i] = k;
  }
  return q;
}

inline SegmentMetrics segment(const std::string& name, std::span<const double> preds, std::span<const double> actuals) {
  return {name, mae(preds, actuals), rmse(preds, actuals), preds.size()};
}

/// Full-period metrics followed by Q1..Q4 (by actual volatility).
inline MetricReport quartile_metrics(std::span<const double> preds, std::span<const double> actuals,
                                     const std::string& variant = "") {
  detail::check_pair(preds, actuals, "quartile_metrics");
  const auto q = quartile_labels(actuals);
  MetricReport r;
  r.variant = variant;
  r.segments.push_back(segment("full", preds, actuals));
  for (int k = 0; k < 4; ++k) {
    std::vector<double> p, a;
    for (std::size_t i = 0; i < q.size(); ++i)
      if (q[i] == k) {
        p.push_back(preds[i]);
        a.push_back(actuals[i]);
      }
    const std::string name = "Q" + std::to_string(k + 1);
    if (p.empty()) r.segments.push_back({name, 0.0, 0.0, 0});
    else r.segments.push_back(segment(name, p, a));
  }
  return r;
}

/// Share (percent) of dates whose predicted move from the actual `horizon`
/// days earlier has the same sign as the realized move. Zero moves match only
/// each other.
inline double directional_accuracy(std::span<const double> preds, std::span<const double> actuals, std::size_t horizon) {
  detail::check_pair(preds, actuals, "directional_accuracy");
  if (horizon < 1) throw UsageError("directional_accuracy: horizon must be >= 1");
  if (preds.size() <= horizon) throw DataError("directional_accuracy: series not longer than the horizon");
  auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
  std::size_t hit = 0;
  for (std::size_t t = horizon; t < preds.size(); ++t)
    if (sgn(preds[t] - actuals[t - horizon]) == sgn(actuals[t] - actuals[t - horizon])) ++hit;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(preds.size() - horizon);
}

inline double improvement(double base, double challenger) {
  if (base == 0.0) throw NumericError("improvement: base metric is zero");
  return 100.0 * (base - challenger) / base;
}

struct Improvement {
  std::string segment;
  double mae = 0.0;
  double rmse = 0.0;
};

/// Percentage improvement of `challenger` over `base`, segment by segment.
/// Segments empty on either side are left out.
inline std::vector<Improvement> improvement(const MetricReport& base, const MetricReport& challenger) {
  std::vector<Improvement> out;
  for (const auto& s : base.segments) {
    const auto& c = challenger.at(s.segment);
    if (s.count == 0 || c.count == 0) continue;
    out.push_back({s.segment, improvement(s.mae, c.mae), improvement(s.rmse, c.rmse)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plain-text tables

/// Column-aligned table; the first column is left-aligned, the rest right.
inline std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size(), 0);
  for (std::size_t j = 0; j < header.size(); ++j) w[j] = header[j].size();
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size() && j < w.size(); ++j) w[j] = std::max(w[j], r[j].size());
  std::ostringstream o;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      const std::string c = j < cells.size() ? cells[j] : "";
      if (j) o << "  ";
      if (j == 0) o << c << std::string(w[j] - c.size(), ' ');
      else o << std::string(w[j] - c.size(), ' ') << c;
    }
    o << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  o << std::string(total + 2 * (w.size() - 1), '-') << "\n";
  for (const auto& r : rows) line(r);
  return o.str();
}

inline std::string sci(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*e", digits, v);
  return buf;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace volfc::eval
