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

// Price ingestion and the derived return / volatility series.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "volfc/common.hpp"
#include "volfc/io.hpp"

namespace volfc {

/// Dated closing prices of one instrument. Dates strictly increase and every
/// close is strictly positive.
class PriceSeries {
 public:
  PriceSeries() = default;
  PriceSeries(std::vector<Date> dates, std::vector<double> close)
      : dates_(std::move(dates)), close_(std::move(close)) {
    if (dates_.size() != close_.size())
      throw DataError("price series: dates and closes differ in length");
    for (std::size_t i = 0; i < close_.size(); ++i) {
      if (!(close_[i] > 0.0) || !std::isfinite(close_[i]))
        throw DataError("price series: non-positive close at " + dates_[i].iso());
      if (i > 0 && !(dates_[i - 1] < dates_[i]))
        throw DataError("price series: dates not strictly increasing at " + dates_[i].iso());
    }
  }

  std::size_t size() const { return close_.size(); }
  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<double>& close() const { return close_; }

 private:
  std::vector<Date> dates_;
  std::vector<double> close_;
};

namespace detail {
// Days since 1970-01-01 in the proleptic Gregorian calendar.
inline long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const long yoe = y - era * 400;
  const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

inline Date civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const long doe = z - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  return Date{static_cast<int>(yoe + era * 400 + (m <= 2)), m, d};
}
}  // namespace detail

/// `n` consecutive weekdays starting at `start` (moved forward to a weekday).
/// Holidays are ignored; used for synthetic series.
inline std::vector<Date> business_days(Date start, std::size_t n) {
  std::vector<Date> out;
  out.reserve(n);
  long z = detail::days_from_civil(start.year, start.month, start.day);
  while (out.size() < n) {
    const long wd = ((z % 7) + 7 + 3) % 7;  // 0 = Monday
    if (wd < 5) out.push_back(detail::civil_from_days(z));
    ++z;
  }
  return out;
}

enum class ReturnKind { kLog, kPct };

inline const char* to_string(ReturnKind k) { return k == ReturnKind::kLog ? "log" : "pct"; }

inline ReturnKind parse_return_kind(const std::string& s) {
  if (s == "log") return ReturnKind::kLog;
  if (s == "pct") return ReturnKind::kPct;
  throw UsageError("unknown return kind '" + s + "' (expected log|pct)");
}

/// One return per price date after the first; dates[i] is the later day.
struct ReturnSeries {
  std::vector<Date> dates;
  std::vector<double> values;
  ReturnKind kind = ReturnKind::kLog;

  std::size_t size() const { return values.size(); }
};

/// Rolling dispersion; dates[i] is the last day of the window.
struct VolatilitySeries {
  std::vector<Date> dates;
  std::vector<double> values;
  int window = 0;

  std::size_t size() const { return values.size(); }
};

struct ColumnMap {
  std::string date = "Date";
  std::string close = "Close";
};

struct SkippedRow {
  std::size_t line = 0;  // 1-based line number in the file, header is line 1
  std::string reason;
};

struct IngestResult {
  PriceSeries series;
  std::vector<SkippedRow> skipped;
};

/// Parses CSV text with a header row. Rows with an unparseable date or a
/// missing / non-numeric / non-positive close are skipped and reported;
/// later duplicates of a date are skipped too. Output is sorted by date.
inline IngestResult parse_price_csv(std::string_view text, const ColumnMap& columns = {},
                                    const std::string& source = "<csv>") {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  auto header = io::split_csv_line(line);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  auto col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = col(columns.date);
  const std::size_t close_col = col(columns.close);

  std::vector<std::pair<Date, double>> rows;
  std::vector<std::size_t> row_lines;
  IngestResult result;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    auto fields = io::split_csv_line(line);
    if (fields.size() <= std::max(date_col, close_col)) {
      result.skipped.push_back({lineno, "too few fields"});
      continue;
    }
    Date d;
    try {
      d = Date::parse(fields[date_col]);
    } catch (const DataError& e) {
      result.skipped.push_back({lineno, e.what()});
      continue;
    }
    auto close = io::parse_double(fields[close_col]);
    if (!close || !std::isfinite(*close)) {
      result.skipped.push_back({lineno, "missing or non-numeric close '" + fields[close_col] + "'"});
      continue;
    }
    if (*close <= 0.0) {
      result.skipped.push_back({lineno, "non-positive close"});
      continue;
    }
    rows.emplace_back(d, *close);
    row_lines.push_back(lineno);
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].first < rows[b].first; });
  std::vector<Date> dates;
  std::vector<double> close;
  for (std::size_t idx : order) {
    if (!dates.empty() && dates.back() == rows[idx].first) {
      result.skipped.push_back({row_lines[idx], "duplicate date " + rows[idx].first.iso()});
      continue;
    }
    dates.push_back(rows[idx].first);
    close.push_back(rows[idx].second);
  }
  std::sort(result.skipped.begin(), result.skipped.end(),
            [](const SkippedRow& a, const SkippedRow& b) { return a.line < b.line; });
  if (dates.empty()) throw DataError(source + ": no valid rows");
  result.series = PriceSeries(std::move(dates), std::move(close));
  return result;
}

inline IngestResult ingest_csv(const std::string& path, const ColumnMap& columns = {}) {
  return parse_price_csv(io::read_file(path), columns, path);
}

inline void write_price_csv(const std::string& path, const PriceSeries& p,
                            const std::string& close_name = "Close") {
  std::string out = "Date," + close_name + "\n";
  for (std::size_t i = 0; i < p.size(); ++i)
    out += p.dates()[i].iso() + "," + io::format_double(p.close()[i]) + "\n";
  io::write_file(path, out);
}

inline ReturnSeries log_returns(const PriceSeries& p) {
  if (p.size() < 2) throw DataError("log_returns: need at least 2 prices");
  ReturnSeries r;
  r.kind = ReturnKind::kLog;
  r.dates.assign(p.dates().begin() + 1, p.dates().end());
  r.values.resize(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) r.values[i] = std::log(p.close()[i + 1] / p.close()[i]);
  return r;
}

inline ReturnSeries pct_change(const PriceSeries& p) {
  if (p.size() < 2) throw DataError("pct_change: need at least 2 prices");
  ReturnSeries r;
  r.kind = ReturnKind::kPct;
  r.dates.assign(p.dates().begin() + 1, p.dates().end());
  r.values.resize(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    r.values[i] = (p.close()[i + 1] - p.close()[i]) / p.close()[i];
  return r;
}

inline ReturnSeries returns(const PriceSeries& p, ReturnKind kind) {
  return kind == ReturnKind::kLog ? log_returns(p) : pct_change(p);
}

/// Sample standard deviation (N-1 denominator) over each full window ending
/// at t. `annualization` multiplies every value; 1 leaves daily units.
inline VolatilitySeries rolling_volatility(const ReturnSeries& r, int window,
                                           double annualization = 1.0) {
  if (window < 2) throw DataError("rolling_volatility: window must be >= 2");
  const auto w = static_cast<std::size_t>(window);
  if (r.size() < w) throw DataError("rolling_volatility: window larger than series");
  VolatilitySeries v;
  v.window = window;
  v.dates.assign(r.dates.begin() + static_cast<std::ptrdiff_t>(w - 1), r.dates.end());
  v.values.resize(r.size() - w + 1);
  for (std::size_t end = w; end <= r.size(); ++end) {
    double mean = 0.0;
    for (std::size_t i = end - w; i < end; ++i) mean += r.values[i];
    mean /= static_cast<double>(w);
    double ss = 0.0;
    for (std::size_t i = end - w; i < end; ++i) {
      const double d = r.values[i] - mean;
      ss += d * d;
    }
    v.values[end - w] = std::sqrt(ss / static_cast<double>(w - 1)) * annualization;
  }
  return v;
}

/// Value at date t is the input value at t-k; the first k dates drop out.
inline VolatilitySeries lag(const VolatilitySeries& s, int k) {
  if (k < 0) throw DataError("lag: k must be >= 0");
  const auto kk = static_cast<std::size_t>(k);
  if (kk >= s.size()) throw DataError("lag: k must be smaller than the series length");
  VolatilitySeries out;
  out.window = s.window;
  out.dates.assign(s.dates.begin() + static_cast<std::ptrdiff_t>(kk), s.dates.end());
  out.values.assign(s.values.begin(), s.values.end() - static_cast<std::ptrdiff_t>(kk));
  return out;
}

/// Linear-interpolation quantile of an ascending-sorted sample
/// (position q*(n-1) between order statistics).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> x, double q) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, q);
}

struct DescriptiveStats {
  std::size_t count = 0;
  double mean = 0, std = 0, min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
  double skewness = 0, kurtosis = 0;  // raw (non-excess) kurtosis; 3 for a normal
  bool moments_defined = true;        // false when the sample has zero dispersion
};

inline DescriptiveStats descriptive_stats(std::span<const double> x) {
  if (x.empty()) throw DataError("descriptive_stats: empty input");
  if (x.size() < 2) throw DataError("descriptive_stats: need at least 2 values");
  DescriptiveStats s;
  s.count = x.size();
  const double n = static_cast<double>(x.size());
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  s.std = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  } else {
    s.moments_defined = false;
    s.skewness = s.kurtosis = std::nan("");
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q25 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q75 = quantile_sorted(sorted, 0.75);
  return s;
}

/// Result of aligning several dated columns on their common dates.
struct JoinedColumns {
  std::vector<Date> dates;
  std::vector<std::vector<double>> columns;
  std::vector<std::size_t> dropped;  // per input: rows without a partner
};

/// Inner join on dates. Each input must have strictly increasing dates.
inline JoinedColumns inner_join(const std::vector<std::pair<const std::vector<Date>*,
                                                            const std::vector<double>*>>& inputs) {
  JoinedColumns out;
  const std::size_t k = inputs.size();
  out.columns.resize(k);
  out.dropped.assign(k, 0);
  if (k == 0) return out;
  std::vector<std::size_t> pos(k, 0);
  for (;;) {
    bool done = false;
    Date hi{};
    for (std::size_t j = 0; j < k; ++j) {
      if (pos[j] >= inputs[j].first->size()) {
        done = true;
        break;
      }
      hi = std::max(hi, (*inputs[j].first)[pos[j]]);
    }
    if (done) break;
    bool all_equal = true;
    for (std::size_t j = 0; j < k; ++j) {
      while (pos[j] < inputs[j].first->size() && (*inputs[j].first)[pos[j]] < hi) {
        ++pos[j];
        ++out.dropped[j];
      }
      if (pos[j] >= inputs[j].first->size() || (*inputs[j].first)[pos[j]] != hi) all_equal = false;
    }
    if (!all_equal) continue;
    out.dates.push_back(hi);
    for (std::size_t j = 0; j < k; ++j) out.columns[j].push_back((*inputs[j].second)[pos[j]++]);
  }
  for (std::size_t j = 0; j < k; ++j) out.dropped[j] += inputs[j].first->size() - pos[j];
  return out;
}

}  // namespace volfc
