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

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>

#include "volfc/common.hpp"

namespace volfc::garch {

struct AdfResult {
  double statistic = 0.0;  // t-ratio of the lagged-level coefficient
  int lags = 0;
  std::size_t nobs = 0;    // observations in the regression
  bool reject_1 = false;
  bool reject_5 = false;
  bool reject_10 = false;
};

// Asymptotic critical values, constant-only specification.
inline constexpr double kAdfCritical1 = -3.43;
inline constexpr double kAdfCritical5 = -2.86;
inline constexpr double kAdfCritical10 = -2.57;

/// Schwert rule: floor(12 * (n / 100)^(1/4)).
inline int schwert_lags(std::size_t n) {
  return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

/// Augmented Dickey-Fuller test with a constant:
///   dx_t = c + g x_{t-1} + sum_{i=1..L} phi_i dx_{t-i} + e_t.
/// `lags` < 0 selects the Schwert rule.
inline AdfResult adf_test(std::span<const double> x, int lags = -1) {
  const std::size_t n = x.size();
  if (n < 25) throw DataError("adf_test: need at least 25 observations");
  const int L = lags < 0 ? schwert_lags(n) : lags;
  if (static_cast<std::size_t>(L) + 3 >= n) throw DataError("adf_test: too many lags for the sample");
  // Rows t = L+1 .. n-1 (dx_t needs x_{t-1}; lagged dx_{t-i} needs t-i >= 1).
  const Eigen::Index rows = static_cast<Eigen::Index>(n) - L - 1;
  const Eigen::Index cols = 2 + L;
  if (rows <= cols) throw DataError("adf_test: too few observations for the regression");
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = static_cast<std::size_t>(r) + L + 1;
    y[r] = x[t] - x[t - 1];
    X(r, 0) = x[t - 1];
    X(r, 1) = 1.0;
    for (int i = 1; i <= L; ++i) X(r, 1 + i) = x[t - i] - x[t - i - 1];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < cols) throw NumericError("adf_test: singular regression");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double s2 = resid.squaredNorm() / static_cast<double>(rows - cols);
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(cols, 0);
  const double var_g = s2 * xtx.ldlt().solve(e0)[0];
  if (!(var_g > 0.0) || !std::isfinite(var_g)) throw NumericError("adf_test: singular regression");

  AdfResult res;
  res.statistic = beta[0] / std::sqrt(var_g);
  res.lags = L;
  res.nobs = static_cast<std::size_t>(rows);
  res.reject_1 = res.statistic < kAdfCritical1;
  res.reject_5 = res.statistic < kAdfCritical5;
  res.reject_10 = res.statistic < kAdfCritical10;
  return res;
}

}  // namespace volfc::garch
