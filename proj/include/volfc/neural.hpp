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

// Training loop, Adam, random search and parameter files for LstmNetwork.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "volfc/io.hpp"
#include "volfc/lstm.hpp"

namespace volfc::nn {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(AdamState& s, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate) {
  if (s.m.size() != params.size()) {
    s.m = Eigen::VectorXd::Zero(params.size());
    s.v = Eigen::VectorXd::Zero(params.size());
    s.step = 0;
  }
  if (grad.size() != params.size()) throw DataError("adam_step: gradient size mismatch");
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  params.array() -= learning_rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.epsilon);
}

/// Windows and their scalar targets.
struct Dataset {
  std::vector<Sequence> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  void check() const {
    if (x.size() != y.size()) throw DataError("dataset: inputs and targets differ in length");
  }
};

// Independent streams derived from one seed.
inline std::uint64_t init_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x1111); }
inline std::uint64_t shuffle_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x2222); }
inline std::uint64_t dropout_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x3333); }

/// Freshly initialized network for `config`.
inline LstmNetwork make_network(const NetworkConfig& config, int input_features) {
  LstmNetwork net(config, input_features);
  net.initialize(init_seed(config.seed));
  return net;
}

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // 0-based
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
};

/// Loss of the network on a whole dataset with dropout off.
inline double evaluate_loss(const LstmNetwork& net, const Dataset& data, LossKind kind) {
  const Eigen::VectorXd p = predict(net, data.x);
  return loss(kind, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), data.y);
}

/// Mini-batch Adam training with early stopping on the validation loss.
/// On return `net` holds the weights of the best validation epoch.
inline TrainHistory train(LstmNetwork& net, const Dataset& train_set, const Dataset& val_set) {
  const NetworkConfig& cfg = net.config();
  cfg.validate();
  train_set.check();
  val_set.check();
  if (train_set.empty() || val_set.empty()) throw DataError("train: training and validation sets must be nonempty");
  const int T = static_cast<int>(train_set.x.front().rows());

  std::mt19937_64 shuffle_rng(shuffle_seed(cfg.seed));
  std::mt19937_64 dropout_rng(dropout_seed(cfg.seed));
  AdamState adam(net.parameters().size());
  TrainHistory hist;
  Eigen::VectorXd best = net.parameters();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> targets;
  ForwardCache cache;
  int wait = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const int B = static_cast<int>(idx.size());
      targets.resize(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) targets[k] = train_set.y[idx[k]];
      const DropoutMasks masks = draw_masks(net, T, B, dropout_rng);
      try {
        forward_batch(net, make_batch(train_set.x, idx), cache, &masks);
      } catch (const NumericError&) {
        throw NumericError("train: diverged at epoch " + std::to_string(epoch + 1));
      }
      const double l = loss(cfg.loss, std::span<const double>(cache.y.data(), idx.size()), targets);
      if (!std::isfinite(l)) throw NumericError("train: diverged at epoch " + std::to_string(epoch + 1));
      total += l * B;
      Eigen::VectorXd grad;
      try {
        grad = backward(net, cache, targets, cfg.loss);
      } catch (const NumericError& e) {
        throw NumericError("train: diverged at epoch " + std::to_string(epoch + 1) + " (" + e.what() + ")");
      }
      adam_step(adam, net.parameters(), grad, cfg.learning_rate);
    }
    EpochRecord rec;
    rec.train_loss = total / static_cast<double>(order.size());
    try {
      rec.val_loss = evaluate_loss(net, val_set, cfg.loss);
    } catch (const NumericError&) {
      throw NumericError("train: diverged at epoch " + std::to_string(epoch + 1));
    }
    if (!std::isfinite(rec.val_loss)) throw NumericError("train: diverged at epoch " + std::to_string(epoch + 1));
    hist.epochs.push_back(rec);
    if (rec.val_loss < hist.best_val_loss) {
      hist.best_val_loss = rec.val_loss;
      hist.best_epoch = epoch;
      best = net.parameters();
      wait = 0;
    } else if (++wait >= std::max(cfg.patience, 1)) {
      hist.stopped_early = epoch + 1 < cfg.epochs;
      break;
    }
  }
  net.parameters() = best;
  return hist;
}

// ---------------------------------------------------------------------------
// Random search

struct SearchSpace {
  std::vector<int> layers{1, 2, 3};
  std::vector<int> units{32, 64, 128};
  std::vector<Activation> activations{Activation::kTanh, Activation::kRelu};
  std::vector<double> dropouts{0.0, 0.1, 0.2, 0.3};
  std::vector<double> learning_rates{1e-2, 1e-3, 1e-4};
  std::vector<LossKind> losses{LossKind::kMse, LossKind::kMae};

  bool empty() const {
    return layers.empty() || units.empty() || activations.empty() || dropouts.empty() || learning_rates.empty() ||
           losses.empty();
  }
};

struct TrialRecord {
  NetworkConfig config;
  double score = std::numeric_limits<double>::infinity();  // mean best validation loss
  bool diverged = false;
};

struct SearchResult {
  NetworkConfig best;
  std::size_t best_trial = 0;
  std::vector<TrialRecord> trials;
};

/// Draws one configuration; `base` supplies everything outside the space
/// (epochs, batch size, patience, recurrent dropout, output head).
/// Units are drawn per layer; activation and dropout are shared.
template <typename Rng>
NetworkConfig sample_config(const SearchSpace& space, const NetworkConfig& base, Rng& rng) {
  auto pick = [&](const auto& v) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };
  NetworkConfig c = base;
  const int n = pick(space.layers);
  const Activation act = pick(space.activations);
  const double drop = pick(space.dropouts);
  c.layers.clear();
  for (int l = 0; l < n; ++l) c.layers.push_back({pick(space.units), act, drop});
  c.learning_rate = pick(space.learning_rates);
  c.loss = pick(space.losses);
  return c;
}

/// Samples `trials` configurations and keeps the one with the lowest mean
/// best-validation-loss over `executions` independently seeded trainings.
/// Ties go to the earlier trial. Trials may run on `threads` workers; the
/// result does not depend on the thread count.
inline SearchResult random_search(const SearchSpace& space, const NetworkConfig& base, const Dataset& train_set,
                                  const Dataset& val_set, int trials, int executions, std::uint64_t seed,
                                  unsigned threads = 1) {
  if (space.empty()) throw UsageError("random_search: empty search space");
  if (trials < 1 || executions < 1) throw UsageError("random_search: trials and executions must be >= 1");
  if (train_set.empty() || val_set.empty()) throw DataError("random_search: empty dataset");
  const int F = static_cast<int>(train_set.x.front().cols());

  SearchResult res;
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) res.trials.push_back({sample_config(space, base, rng)});

  auto run_trial = [&](std::size_t t) {
    TrialRecord& rec = res.trials[t];
    double sum = 0.0;
    for (int e = 0; e < executions; ++e) {
      NetworkConfig c = rec.config;
      c.seed = splitmix64(seed + 1000003ULL * (t + 1) + static_cast<std::uint64_t>(e));
      try {
        LstmNetwork net = make_network(c, F);
        sum += train(net, train_set, val_set).best_val_loss;
      } catch (const NumericError&) {
        rec.diverged = true;
        return;
      }
    }
    rec.score = sum / executions;
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(trials)));
  if (workers == 1) {
    for (std::size_t t = 0; t < res.trials.size(); ++t) run_trial(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t; (t = next++) < res.trials.size();) run_trial(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  bool any = false;
  for (std::size_t t = 0; t < res.trials.size(); ++t) {
    const auto& r = res.trials[t];
    if (r.diverged) continue;
    if (!any || r.score < res.trials[res.best_trial].score) {
      res.best_trial = t;
      any = true;
    }
  }
  if (!any) throw NumericError("random_search: all trials diverged");
  res.best = res.trials[res.best_trial].config;
  return res;
}

// ---------------------------------------------------------------------------
// Parameter files
//
//   volfc-lstm 1
//   inputs <F>
//   layer <units> <activation> <dropout>      (one line per layer)
//   recurrent_dropout <r>
//   output <activation>
//   learning_rate / loss / epochs / batch_size / patience / seed
//   parameters <N>
//   <N values, one per line, in the flat layout>

inline std::string save_text(const LstmNetwork& net) {
  const auto& c = net.config();
  std::ostringstream out;
  out << "volfc-lstm 1\n";
  out << "inputs " << net.input_features() << "\n";
  for (const auto& l : c.layers)
    out << "layer " << l.units << ' ' << to_string(l.activation) << ' ' << io::format_double(l.dropout) << "\n";
  out << "recurrent_dropout " << io::format_double(c.recurrent_dropout) << "\n";
  out << "output " << to_string(c.output_activation) << "\n";
  out << "learning_rate " << io::format_double(c.learning_rate) << "\n";
  out << "loss " << to_string(c.loss) << "\n";
  out << "epochs " << c.epochs << "\nbatch_size " << c.batch_size << "\npatience " << c.patience << "\n";
  out << "seed " << c.seed << "\n";
  const auto& p = net.parameters();
  out << "parameters " << p.size() << "\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) out << io::format_double(p[i]) << "\n";
  return out.str();
}

inline LstmNetwork load_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "volfc-lstm") throw DataError("parameter file: missing volfc-lstm header");
  if (version != 1) throw DataError("parameter file: unsupported version " + std::to_string(version));
  NetworkConfig c;
  c.layers.clear();
  int inputs = 0;
  auto number = [&](const std::string& key) {
    std::string s;
    if (!(in >> s)) throw DataError("parameter file: truncated at " + key);
    const auto v = io::parse_double(s);
    if (!v) throw DataError("parameter file: bad number for " + key);
    return *v;
  };
  while (in >> tag) {
    if (tag == "inputs") inputs = static_cast<int>(number(tag));
    else if (tag == "layer") {
      LayerSpec l;
      std::string act;
      l.units = static_cast<int>(number(tag));
      in >> act;
      l.activation = parse_activation(act);
      l.dropout = number(tag);
      c.layers.push_back(l);
    } else if (tag == "recurrent_dropout") c.recurrent_dropout = number(tag);
    else if (tag == "output") {
      std::string act;
      in >> act;
      c.output_activation = parse_activation(act);
    } else if (tag == "learning_rate") c.learning_rate = number(tag);
    else if (tag == "loss") {
      std::string k;
      in >> k;
      c.loss = parse_loss(k);
    } else if (tag == "epochs") c.epochs = static_cast<int>(number(tag));
    else if (tag == "batch_size") c.batch_size = static_cast<int>(number(tag));
    else if (tag == "patience") c.patience = static_cast<int>(number(tag));
    else if (tag == "seed") {
      std::string s;
      in >> s;
      c.seed = std::stoull(s);
    } else if (tag == "parameters") break;
    else throw DataError("parameter file: unknown key '" + tag + "'");
  }
  if (tag != "parameters") throw DataError("parameter file: missing parameter block");
  LstmNetwork net(c, inputs);
  const auto n = static_cast<Eigen::Index>(number("parameters"));
  if (n != net.parameters().size())
    throw DataError("parameter file: expected " + std::to_string(net.parameters().size()) + " values, header says " +
                    std::to_string(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    net.parameters()[i] = number("parameters");
    if (!std::isfinite(net.parameters()[i])) throw DataError("parameter file: non-finite parameter");
  }
  return net;
}

}  // namespace volfc::nn
