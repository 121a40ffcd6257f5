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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace volfc::optim {

struct NelderMeadOptions {
  double xtol = 1e-8;     // converged when every vertex lies within xtol of the best (max-norm)
  int max_iterations = 2000;
  bool adaptive = false;  // dimension-dependent coefficients (Gao & Han, 2012)
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization. Standard coefficients are
/// reflection 1, expansion 2, contraction 1/2, shrink 1/2; the adaptive
/// variant uses 1, 1 + 2/n, 3/4 - 1/(2n), 1 - 1/n. Non-finite objective
/// values count as +inf.
/// `steps[i]` is the initial simplex edge along coordinate i.
template <typename F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  const double dn = static_cast<double>(n);
  const double chi = opt.adaptive && n > 1 ? 1.0 + 2.0 / dn : 2.0;
  const double gamma = opt.adaptive && n > 1 ? 0.75 - 0.5 / dn : 0.5;
  const double sigma = opt.adaptive && n > 1 ? 1.0 - 1.0 / dn : 0.5;
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s2[i] = std::move(simplex[order[i]]);
      f2[i] = fv[order[i]];
    }
    simplex = std::move(s2);
    fv = std::move(f2);
  };
  auto size = [&] {
    double m = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) m = std::max(m, std::abs(simplex[i][j] - simplex[0][j]));
    return m;
  };

  sort_simplex();
  while (res.iterations < opt.max_iterations) {
    if (size() <= opt.xtol) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto& worst = simplex[n];
    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - worst[j]);
    const double fr = eval(xr);

    if (fr < fv[0]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + chi * (centroid[j] - worst[j]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
    } else {
      bool outside = fr < fv[n];
      for (std::size_t j = 0; j < n; ++j)
        xc[j] = outside ? centroid[j] + gamma * (xr[j] - centroid[j])
                        : centroid[j] + gamma * (worst[j] - centroid[j]);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[n])) {
        simplex[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            simplex[i][j] = simplex[0][j] + sigma * (simplex[i][j] - simplex[0][j]);
          fv[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
  }
  if (!res.converged && size() <= opt.xtol) res.converged = true;
  res.x = simplex[0];
  res.value = fv[0];
  return res;
}

}  // namespace volfc::optim
