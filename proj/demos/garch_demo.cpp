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

// Simulates a GARCH(1,1) series, picks the order by AIC and prints the fit
// next to the true parameters.

#include <cstdio>

#include "volfc/garch.hpp"

int main() {
  using namespace volfc;
  garch::GarchParams truth;
  truth.omega = 0.05;
  truth.alpha = {0.08};
  truth.beta = {0.9};
  const auto r = garch::simulate(truth, 5000, 7);

  garch::FitOptions opt;
  opt.scale = 1.0;
  std::vector<garch::GarchFit> all;
  const auto best = garch::select_order(r, 2, 2, opt, &all, 1);

  std::printf("%-8s %12s %12s\n", "order", "loglik", "aic");
  for (const auto& f : all) std::printf("(%d,%d)    %12.3f %12.3f\n", f.p, f.q, f.loglik, f.aic);
  std::printf("\nselected GARCH(%d,%d)\n", best.p, best.q);
  std::printf("omega %.4f (true 0.05)\n", best.params.omega);
  for (int i = 0; i < best.q; ++i) std::printf("alpha%d %.4f\n", i + 1, best.params.alpha[static_cast<std::size_t>(i)]);
  for (int j = 0; j < best.p; ++j) std::printf("beta%d  %.4f\n", j + 1, best.params.beta[static_cast<std::size_t>(j)]);
  std::printf("next-day sigma %.4f\n", garch::forecast_one_step(best, r));
}
