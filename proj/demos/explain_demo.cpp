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

// Explains one prediction of a hand-written volatility rule with the local
// surrogate. The rule leans on the two most recent lagged-volatility cells.

#include <iostream>
#include <random>

#include "volfc/explain.hpp"

int main() {
  namespace ex = volfc::explain;
  const std::vector<std::string> features{"log_returns", "lagged_volatility"};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> ret(0.0, 0.01);
  std::uniform_real_distribution<double> vol(0.005, 0.03);
  std::vector<Eigen::MatrixXd> windows;
  for (int i = 0; i < 300; ++i) {
    Eigen::MatrixXd w(22, 2);
    for (Eigen::Index t = 0; t < 22; ++t) {
      w(t, 0) = ret(rng);
      w(t, 1) = vol(rng);
    }
    windows.push_back(w);
  }
  auto rule = [](const Eigen::MatrixXd& w) { return 0.6 * w(21, 1) + 0.3 * w(20, 1) + 0.1 * std::abs(w(21, 0)); };

  const auto bins = ex::discretize_stats(windows);
  ex::ExplainerConfig cfg;
  cfg.num_samples = 3000;
  cfg.num_features = 5;
  std::cout << ex::report(ex::explain_instance(rule, windows[0], features, bins, cfg));
}
