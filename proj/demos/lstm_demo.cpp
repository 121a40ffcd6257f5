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

// Trains a one-layer LSTM to output the mean of a short window.

#include <cstdio>
#include <random>

#include "volfc/neural.hpp"

int main() {
  using namespace volfc::nn;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto make = [&](std::size_t n) {
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
      Sequence x = Sequence::NullaryExpr(10, 1, [&] { return u(rng); });
      d.y.push_back(x.mean());
      d.x.push_back(std::move(x));
    }
    return d;
  };
  const Dataset train_set = make(512), val_set = make(128);

  NetworkConfig c;
  c.layers = {{16, Activation::kTanh, 0.0}};
  c.recurrent_dropout = 0.0;
  c.learning_rate = 0.005;
  c.epochs = 60;
  c.patience = 10;
  c.batch_size = 32;
  c.seed = 3;
  auto net = make_network(c, 1);
  const auto h = train(net, train_set, val_set);
  for (std::size_t e = 0; e < h.epochs.size(); e += 10)
    std::printf("epoch %3zu  train %.3e  val %.3e\n", e + 1, h.epochs[e].train_loss, h.epochs[e].val_loss);
  std::printf("best epoch %d, val mse %.3e%s\n", h.best_epoch + 1, h.best_val_loss,
              h.stopped_early ? " (stopped early)" : "");
}
