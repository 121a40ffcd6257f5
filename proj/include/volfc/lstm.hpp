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

// Stacked LSTM regressor with a single-unit dense head.
//
// Per layer and time step, with g the layer activation (tanh or relu):
//
//   f_t = sigmoid(U_f x_t + V_f h_{t-1} + b_f)
//   i_t = sigmoid(U_i x_t + V_i h_{t-1} + b_i)
//   o_t = sigmoid(U_o x_t + V_o h_{t-1} + b_o)
//   c~_t = g(U_c x_t + V_c h_{t-1} + b_c)
//   C_t = f_t * C_{t-1} + i_t * c~_t
//   h_t = o_t * g(C_t)
//
// Every layer but the last passes its whole hidden sequence upward; the last
// one hands only its final h to the dense layer.
//
// Parameters live in one contiguous vector. Layout, per layer in order:
// U (4H x In), V (4H x H), b (4H), each column-major with row blocks in gate
// order f, i, o, c; then the dense weights (H_last) and the dense bias.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "volfc/common.hpp"

namespace volfc::nn {

enum class Activation { kTanh, kRelu, kLinear };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw UsageError("unknown activation '" + s + "'");
}

enum class LossKind { kMse, kMae };

inline const char* to_string(LossKind k) { return k == LossKind::kMse ? "mse" : "mae"; }

inline LossKind parse_loss(const std::string& s) {
  if (s == "mse" || s == "MSE") return LossKind::kMse;
  if (s == "mae" || s == "MAE") return LossKind::kMae;
  throw UsageError("unknown loss '" + s + "' (expected mse|mae)");
}

struct LayerSpec {
  int units = 128;
  Activation activation = Activation::kTanh;
  double dropout = 0.1;  // inverted dropout on this layer's output
};

struct NetworkConfig {
  std::vector<LayerSpec> layers{{128, Activation::kTanh, 0.1}, {128, Activation::kTanh, 0.1}};
  double recurrent_dropout = 0.1;  // first layer, fixed mask per sequence on h_{t-1}
  Activation output_activation = Activation::kRelu;
  double learning_rate = 1e-3;
  LossKind loss = LossKind::kMse;
  int epochs = 100;
  int batch_size = 64;
  int patience = 10;
  std::uint64_t seed = 42;

  void validate() const {
    if (layers.empty()) throw UsageError("network: at least one LSTM layer required");
    for (const auto& l : layers) {
      if (l.units < 1) throw UsageError("network: layer units must be >= 1");
      if (!(l.dropout >= 0.0 && l.dropout < 1.0)) throw UsageError("network: dropout must lie in [0, 1)");
      if (l.activation == Activation::kLinear) throw UsageError("network: LSTM activation must be tanh or relu");
    }
    if (!(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0))
      throw UsageError("network: recurrent dropout must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw UsageError("network: learning rate must be > 0");
    if (epochs < 1 || batch_size < 1) throw UsageError("network: epochs and batch size must be >= 1");
    if (patience < 0) throw UsageError("network: patience must be >= 0");
    if (output_activation == Activation::kTanh) throw UsageError("network: output activation must be relu or linear");
  }
};

/// Deterministic 64-bit mixer for deriving independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double act(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kLinear: return x;
  }
  return x;
}

// Derivative expressed through the pre-activation x and the output y.
inline double act_grad(Activation a, double x, double y) {
  switch (a) {
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kLinear: return 1.0;
  }
  return 1.0;
}
}  // namespace detail

struct LayerShape {
  int input = 0;
  int hidden = 0;
  std::size_t u_offset = 0, v_offset = 0, b_offset = 0;
};

/// Lookback x features input window.
using Sequence = Eigen::MatrixXd;

class LstmNetwork {
 public:
  LstmNetwork() = default;

  LstmNetwork(const NetworkConfig& config, int input_features) : config_(config), inputs_(input_features) {
    config_.validate();
    if (input_features < 1) throw UsageError("network: input width must be >= 1");
    std::size_t off = 0;
    int in = input_features;
    for (const auto& spec : config_.layers) {
      LayerShape s;
      s.input = in;
      s.hidden = spec.units;
      s.u_offset = off;
      off += static_cast<std::size_t>(4 * s.hidden) * s.input;
      s.v_offset = off;
      off += static_cast<std::size_t>(4 * s.hidden) * s.hidden;
      s.b_offset = off;
      off += static_cast<std::size_t>(4 * s.hidden);
      shapes_.push_back(s);
      in = spec.units;
    }
    dense_offset_ = off;
    off += static_cast<std::size_t>(in) + 1;
    theta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix, zero biases except
  /// the forget gate (1.0).
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto fill = [&](double* p, std::size_t n, double fan_in) {
      const double lim = 1.0 / std::sqrt(fan_in);
      std::uniform_real_distribution<double> u(-lim, lim);
      for (std::size_t i = 0; i < n; ++i) p[i] = u(rng);
    };
    theta_.setZero();
    for (const auto& s : shapes_) {
      fill(theta_.data() + s.u_offset, static_cast<std::size_t>(4 * s.hidden) * s.input, s.input);
      fill(theta_.data() + s.v_offset, static_cast<std::size_t>(4 * s.hidden) * s.hidden, s.hidden);
      b(layer_index(s)).segment(0, s.hidden).setOnes();
    }
    fill(theta_.data() + dense_offset_, static_cast<std::size_t>(shapes_.back().hidden), shapes_.back().hidden);
  }

  const NetworkConfig& config() const { return config_; }
  NetworkConfig& mutable_config() { return config_; }
  int input_features() const { return inputs_; }
  std::size_t num_layers() const { return shapes_.size(); }
  const LayerShape& shape(std::size_t l) const { return shapes_[l]; }

  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }
  std::size_t dense_offset() const { return dense_offset_; }

  Eigen::Map<Eigen::MatrixXd> U(std::size_t l) {
    return {theta_.data() + shapes_[l].u_offset, 4 * shapes_[l].hidden, shapes_[l].input};
  }
  Eigen::Map<const Eigen::MatrixXd> U(std::size_t l) const {
    return {theta_.data() + shapes_[l].u_offset, 4 * shapes_[l].hidden, shapes_[l].input};
  }
  Eigen::Map<Eigen::MatrixXd> V(std::size_t l) {
    return {theta_.data() + shapes_[l].v_offset, 4 * shapes_[l].hidden, shapes_[l].hidden};
  }
  Eigen::Map<const Eigen::MatrixXd> V(std::size_t l) const {
    return {theta_.data() + shapes_[l].v_offset, 4 * shapes_[l].hidden, shapes_[l].hidden};
  }
  Eigen::Map<Eigen::VectorXd> b(std::size_t l) { return {theta_.data() + shapes_[l].b_offset, 4 * shapes_[l].hidden}; }
  Eigen::Map<const Eigen::VectorXd> b(std::size_t l) const {
    return {theta_.data() + shapes_[l].b_offset, 4 * shapes_[l].hidden};
  }
  Eigen::Map<Eigen::VectorXd> dense_w() { return {theta_.data() + dense_offset_, shapes_.back().hidden}; }
  Eigen::Map<const Eigen::VectorXd> dense_w() const { return {theta_.data() + dense_offset_, shapes_.back().hidden}; }
  double& dense_b() { return theta_[static_cast<Eigen::Index>(dense_offset_) + shapes_.back().hidden]; }
  double dense_b() const { return theta_[static_cast<Eigen::Index>(dense_offset_) + shapes_.back().hidden]; }

  /// Human-readable name of the tensor that owns flat parameter `index`.
  std::string parameter_name(std::size_t index) const {
    static const char* gates = "fioc";
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      const auto& s = shapes_[l];
      const std::size_t h4 = 4 * static_cast<std::size_t>(s.hidden);
      auto gate = [&](std::size_t row) { return std::string(1, gates[row / s.hidden]); };
      if (index >= s.u_offset && index < s.v_offset)
        return "layer" + std::to_string(l) + ".U_" + gate((index - s.u_offset) % h4);
      if (index >= s.v_offset && index < s.b_offset)
        return "layer" + std::to_string(l) + ".V_" + gate((index - s.v_offset) % h4);
      if (index >= s.b_offset && index < s.b_offset + h4)
        return "layer" + std::to_string(l) + ".b_" + gate(index - s.b_offset);
    }
    return index + 1 == static_cast<std::size_t>(theta_.size()) ? "dense.bias" : "dense.weight";
  }

  bool same_architecture(const LstmNetwork& o) const {
    if (inputs_ != o.inputs_ || shapes_.size() != o.shapes_.size()) return false;
    for (std::size_t l = 0; l < shapes_.size(); ++l)
      if (shapes_[l].hidden != o.shapes_[l].hidden) return false;
    return true;
  }

 private:
  std::size_t layer_index(const LayerShape& s) const { return static_cast<std::size_t>(&s - shapes_.data()); }

  NetworkConfig config_;
  int inputs_ = 0;
  std::vector<LayerShape> shapes_;
  std::size_t dense_offset_ = 0;
  Eigen::VectorXd theta_;
};

/// Output of one cell step.
struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// Owning copy of one layer's weights, gate blocks stacked f, i, o, c.
struct LstmLayerParams {
  Eigen::MatrixXd U;  // 4H x input
  Eigen::MatrixXd V;  // 4H x H
  Eigen::VectorXd b;  // 4H
  Activation activation = Activation::kTanh;

  int hidden_size() const { return static_cast<int>(b.size() / 4); }
  int input_size() const { return static_cast<int>(U.cols()); }
  /// Rows of gate `k` (0=f, 1=i, 2=o, 3=c).
  auto U_gate(int k) { return U.middleRows(k * hidden_size(), hidden_size()); }
  auto V_gate(int k) { return V.middleRows(k * hidden_size(), hidden_size()); }
  auto b_gate(int k) { return b.segment(k * hidden_size(), hidden_size()); }
};

inline LstmLayerParams layer_params(const LstmNetwork& net, std::size_t l) {
  return {net.U(l), net.V(l), net.b(l), net.config().layers[l].activation};
}

/// Single LSTM step for one sample, straight from the gate equations.
inline CellState cell_forward(const LstmLayerParams& layer, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                              const Eigen::VectorXd& c_prev) {
  const int H = layer.hidden_size();
  if (layer.b.size() % 4 != 0 || layer.U.rows() != 4 * H || layer.V.rows() != 4 * H || layer.V.cols() != H ||
      x.size() != layer.U.cols() || h_prev.size() != H || c_prev.size() != H)
    throw DataError("cell_forward: shape mismatch");
  const Activation g = layer.activation;
  const Eigen::VectorXd z = layer.U * x + layer.V * h_prev + layer.b;
  CellState out;
  out.c.resize(H);
  out.h.resize(H);
  for (int k = 0; k < H; ++k) {
    const double f = detail::sigmoid(z[k]);
    const double i = detail::sigmoid(z[H + k]);
    const double o = detail::sigmoid(z[2 * H + k]);
    const double cand = detail::act(g, z[3 * H + k]);
    out.c[k] = f * c_prev[k] + i * cand;
    out.h[k] = o * detail::act(g, out.c[k]);
  }
  return out;
}

inline CellState cell_forward(const LstmNetwork& net, std::size_t layer, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev) {
  return cell_forward(layer_params(net, layer), x, h_prev, c_prev);
}

/// Dropout masks for one batch; empty matrices mean "no dropout".
struct DropoutMasks {
  std::vector<Eigen::MatrixXd> recurrent;            // per layer, H x B
  std::vector<std::vector<Eigen::MatrixXd>> output;  // per layer, per emitted step, H x B
};

/// Everything backward() needs from a batched forward pass.
struct ForwardCache {
  int batch = 0;
  int steps = 0;
  // [layer][t]
  std::vector<std::vector<Eigen::MatrixXd>> x;      // layer input at t (In x B)
  std::vector<std::vector<Eigen::MatrixXd>> hin;    // h_{t-1} after recurrent mask (H x B)
  std::vector<std::vector<Eigen::MatrixXd>> gates;  // activated f,i,o,c~ stacked (4H x B)
  std::vector<std::vector<Eigen::MatrixXd>> zc;     // candidate pre-activation (H x B)
  std::vector<std::vector<Eigen::MatrixXd>> c;      // cell state C_t (H x B)
  std::vector<std::vector<Eigen::MatrixXd>> gc;     // g(C_t) (H x B)
  Eigen::MatrixXd dense_in;                          // last hidden after dropout (H x B)
  Eigen::RowVectorXd z_out;                          // dense pre-activation (1 x B)
  Eigen::RowVectorXd y;                              // predictions (1 x B)
  DropoutMasks masks;
};

/// Batched inputs: steps[t] is In x B (column b = sample b's row t).
using BatchInput = std::vector<Eigen::MatrixXd>;

inline BatchInput make_batch(std::span<const Sequence> seqs, std::span<const std::size_t> idx) {
  if (idx.empty()) throw DataError("make_batch: empty batch");
  const Eigen::Index T = seqs[idx[0]].rows(), F = seqs[idx[0]].cols();
  BatchInput out(static_cast<std::size_t>(T), Eigen::MatrixXd(F, static_cast<Eigen::Index>(idx.size())));
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Sequence& s = seqs[idx[b]];
    if (s.rows() != T || s.cols() != F) throw DataError("make_batch: inconsistent sequence shapes");
    for (Eigen::Index t = 0; t < T; ++t) out[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(b)) = s.row(t).transpose();
  }
  return out;
}

/// Draws inverted-dropout masks (entries 0 or 1/(1-rate)) for a batch.
inline DropoutMasks draw_masks(const LstmNetwork& net, int steps, int batch, std::mt19937_64& rng) {
  DropoutMasks m;
  const auto& cfg = net.config();
  m.recurrent.resize(net.num_layers());
  m.output.resize(net.num_layers());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto mask = [&](int rows, double rate) {
    Eigen::MatrixXd out(rows, batch);
    const double keep = 1.0 / (1.0 - rate);
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = u(rng) < rate ? 0.0 : keep;
    return out;
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const int H = net.shape(l).hidden;
    if (l == 0 && cfg.recurrent_dropout > 0.0) m.recurrent[l] = mask(H, cfg.recurrent_dropout);
    const double rate = cfg.layers[l].dropout;
    if (rate > 0.0) {
      const bool last = l + 1 == net.num_layers();
      const int emitted = last ? 1 : steps;
      for (int t = 0; t < emitted; ++t) m.output[l].push_back(mask(H, rate));
    }
  }
  return m;
}

/// Batched forward pass. When `masks` is null no dropout is applied.
inline void forward_batch(const LstmNetwork& net, const BatchInput& in, ForwardCache& cache,
                          const DropoutMasks* masks = nullptr) {
  const int T = static_cast<int>(in.size());
  if (T == 0) throw DataError("forward: empty sequence");
  const Eigen::Index B = in[0].cols();
  if (in[0].rows() != net.input_features())
    throw DataError("forward: expected " + std::to_string(net.input_features()) + " features, got " +
                    std::to_string(in[0].rows()));
  const std::size_t L = net.num_layers();
  cache.batch = static_cast<int>(B);
  cache.steps = T;
  cache.x.assign(L, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(T)));
  cache.hin = cache.gates = cache.zc = cache.c = cache.gc = cache.x;
  if (masks) cache.masks = *masks;
  else cache.masks = DropoutMasks{};

  std::vector<Eigen::MatrixXd> layer_in(in.begin(), in.end());
  Eigen::MatrixXd z;
  for (std::size_t l = 0; l < L; ++l) {
    const int H = net.shape(l).hidden;
    const Activation g = net.config().layers[l].activation;
    const bool last = l + 1 == L;
    const auto U = net.U(l);
    const auto V = net.V(l);
    const auto bias = net.b(l);
    const Eigen::MatrixXd* rmask =
        masks && l < masks->recurrent.size() && masks->recurrent[l].size() > 0 ? &masks->recurrent[l] : nullptr;
    const std::vector<Eigen::MatrixXd>* omask =
        masks && l < masks->output.size() && !masks->output[l].empty() ? &masks->output[l] : nullptr;

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(H, B);
    std::vector<Eigen::MatrixXd> next_in;
    if (!last) next_in.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      cache.x[l][ts] = layer_in[ts];
      cache.hin[l][ts] = rmask ? Eigen::MatrixXd(h.cwiseProduct(*rmask)) : h;
      z.noalias() = U * layer_in[ts];
      z.noalias() += V * cache.hin[l][ts];
      z.colwise() += bias;
      Eigen::MatrixXd& gt = cache.gates[l][ts];
      gt.resize(4 * H, B);
      gt.topRows(3 * H) = (1.0 + (-z.topRows(3 * H).array()).exp()).inverse().matrix();
      cache.zc[l][ts] = z.bottomRows(H);
      if (g == Activation::kTanh) {
        gt.bottomRows(H) = z.bottomRows(H).array().tanh().matrix();
      } else {
        gt.bottomRows(H) = z.bottomRows(H).cwiseMax(0.0);
      }
      cs = gt.topRows(H).cwiseProduct(cs) + gt.middleRows(H, H).cwiseProduct(gt.bottomRows(H));
      cache.c[l][ts] = cs;
      cache.gc[l][ts] = g == Activation::kTanh ? Eigen::MatrixXd(cs.array().tanh().matrix())
                                               : Eigen::MatrixXd(cs.cwiseMax(0.0));
      h = gt.middleRows(2 * H, H).cwiseProduct(cache.gc[l][ts]);
      if (!last) next_in[ts] = omask ? Eigen::MatrixXd(h.cwiseProduct((*omask)[ts])) : h;
    }
    if (last) {
      cache.dense_in = omask ? Eigen::MatrixXd(h.cwiseProduct((*omask)[0])) : h;
    } else {
      layer_in = std::move(next_in);
    }
  }
  cache.z_out = net.dense_w().transpose() * cache.dense_in;
  cache.z_out.array() += net.dense_b();
  cache.y.resize(B);
  for (Eigen::Index k = 0; k < B; ++k) {
    cache.y[k] = detail::act(net.config().output_activation, cache.z_out[k]);
    if (!std::isfinite(cache.y[k])) throw NumericError("forward: non-finite activation");
  }
}

/// Single-window prediction. With `train_mode` the dropout masks of a
/// training step are drawn from `seed`; otherwise the call is deterministic.
inline double forward(const LstmNetwork& net, const Sequence& seq, bool train_mode = false, std::uint64_t seed = 0) {
  if (seq.cols() != net.input_features()) throw DataError("forward: sequence width does not match the network");
  std::vector<Sequence> one{seq};
  const std::size_t idx = 0;
  BatchInput in = make_batch(one, std::span<const std::size_t>(&idx, 1));
  ForwardCache cache;
  if (train_mode) {
    std::mt19937_64 rng(seed);
    DropoutMasks m = draw_masks(net, static_cast<int>(seq.rows()), 1, rng);
    forward_batch(net, in, cache, &m);
  } else {
    forward_batch(net, in, cache);
  }
  return cache.y[0];
}

/// Inference over many windows, processed in chunks.
inline Eigen::VectorXd predict(const LstmNetwork& net, std::span<const Sequence> seqs, std::size_t chunk = 256) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(seqs.size()));
  ForwardCache cache;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < seqs.size(); start += chunk) {
    const std::size_t end = std::min(seqs.size(), start + chunk);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    forward_batch(net, make_batch(seqs, idx), cache);
    out.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) = cache.y.transpose();
  }
  return out;
}

inline double loss(LossKind kind, std::span<const double> preds, std::span<const double> targets) {
  if (preds.empty() || preds.size() != targets.size()) throw DataError("loss: inputs must be nonempty and equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    s += kind == LossKind::kMse ? d * d : std::abs(d);
  }
  return s / static_cast<double>(preds.size());
}

/// Gradient of the batch-mean loss with respect to every parameter, in the
/// flat parameter layout. Uses the masks stored in `cache`.
/// `loss_scale` multiplies the loss (and hence every gradient).
inline Eigen::VectorXd backward(const LstmNetwork& net, const ForwardCache& cache, std::span<const double> targets,
                                LossKind kind, double loss_scale = 1.0) {
  const int B = cache.batch, T = cache.steps;
  if (B == 0 || static_cast<int>(targets.size()) != B) throw DataError("backward: batch/target size mismatch");
  const std::size_t L = net.num_layers();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameters().size());
  auto gU = [&](std::size_t l) {
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + net.shape(l).u_offset, 4 * net.shape(l).hidden, net.shape(l).input);
  };
  auto gV = [&](std::size_t l) {
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + net.shape(l).v_offset, 4 * net.shape(l).hidden, net.shape(l).hidden);
  };
  auto gb = [&](std::size_t l) { return Eigen::Map<Eigen::VectorXd>(grad.data() + net.shape(l).b_offset, 4 * net.shape(l).hidden); };

  // dLoss / dz_out
  Eigen::RowVectorXd dz(B);
  for (int k = 0; k < B; ++k) {
    const double d = cache.y[k] - targets[static_cast<std::size_t>(k)];
    const double dl = kind == LossKind::kMse ? 2.0 * d : (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
    dz[k] = loss_scale * dl / B *
            detail::act_grad(net.config().output_activation, cache.z_out[k], cache.y[k]);
  }
  const int Hl = net.shape(L - 1).hidden;
  Eigen::Map<Eigen::VectorXd>(grad.data() + net.dense_offset(), Hl) = cache.dense_in * dz.transpose();
  grad[static_cast<Eigen::Index>(net.dense_offset()) + Hl] = dz.sum();

  // Gradient arriving at each layer's emitted outputs (before its dropout mask).
  std::vector<Eigen::MatrixXd> dout(static_cast<std::size_t>(T));
  {
    Eigen::MatrixXd d = net.dense_w() * dz;  // H x B
    const auto& om = cache.masks.output.size() > L - 1 ? cache.masks.output[L - 1] : std::vector<Eigen::MatrixXd>{};
    if (!om.empty()) d = d.cwiseProduct(om[0]);
    for (auto& m : dout) m = Eigen::MatrixXd::Zero(Hl, B);
    dout[static_cast<std::size_t>(T - 1)] = d;
  }

  Eigen::MatrixXd dzg;
  for (std::size_t li = L; li-- > 0;) {
    const int H = net.shape(li).hidden;
    const Activation g = net.config().layers[li].activation;
    const auto U = net.U(li);
    const auto V = net.V(li);
    auto GU = gU(li);
    auto GV = gV(li);
    auto Gb = gb(li);
    const Eigen::MatrixXd* rmask =
        cache.masks.recurrent.size() > li && cache.masks.recurrent[li].size() > 0 ? &cache.masks.recurrent[li] : nullptr;
    std::vector<Eigen::MatrixXd> dx(static_cast<std::size_t>(T));
    Eigen::MatrixXd dh_rec = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
    dzg.resize(4 * H, B);
    for (int t = T - 1; t >= 0; --t) {
      const auto ts = static_cast<std::size_t>(t);
      const Eigen::MatrixXd& gt = cache.gates[li][ts];
      const auto f = gt.topRows(H).array();
      const auto i = gt.middleRows(H, H).array();
      const auto o = gt.middleRows(2 * H, H).array();
      const auto cand = gt.bottomRows(H).array();
      const auto gc = cache.gc[li][ts].array();
      const Eigen::ArrayXXd dh = (dout[ts] + dh_rec).array();

      Eigen::ArrayXXd dgc_dc;
      if (g == Activation::kTanh) dgc_dc = 1.0 - gc.square();
      else dgc_dc = (cache.c[li][ts].array() > 0.0).cast<double>();
      const Eigen::ArrayXXd dc = dc_next.array() + dh * o * dgc_dc;
      const Eigen::ArrayXXd c_prev = t > 0 ? Eigen::ArrayXXd(cache.c[li][ts - 1].array()) : Eigen::ArrayXXd::Zero(H, B);

      dzg.topRows(H) = (dc * c_prev * f * (1.0 - f)).matrix();
      dzg.middleRows(H, H) = (dc * cand * i * (1.0 - i)).matrix();
      dzg.middleRows(2 * H, H) = (dh * gc * o * (1.0 - o)).matrix();
      if (g == Activation::kTanh) dzg.bottomRows(H) = (dc * i * (1.0 - cand.square())).matrix();
      else dzg.bottomRows(H) = (dc * i * (cache.zc[li][ts].array() > 0.0).cast<double>()).matrix();

      GU.noalias() += dzg * cache.x[li][ts].transpose();
      GV.noalias() += dzg * cache.hin[li][ts].transpose();
      Gb += dzg.rowwise().sum();
      if (li > 0) dx[ts].noalias() = U.transpose() * dzg;
      dh_rec.noalias() = V.transpose() * dzg;
      if (rmask) dh_rec = dh_rec.cwiseProduct(*rmask);
      dc_next = (dc * f).matrix();
    }
    if (li > 0) {
      const auto& om = cache.masks.output.size() > li - 1 ? cache.masks.output[li - 1] : std::vector<Eigen::MatrixXd>{};
      for (int t = 0; t < T; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        dout[ts] = om.empty() ? dx[ts] : Eigen::MatrixXd(dx[ts].cwiseProduct(om[ts]));
      }
    }
  }
  for (Eigen::Index k = 0; k < grad.size(); ++k)
    if (!std::isfinite(grad[k]))
      throw NumericError("backward: non-finite gradient for " + net.parameter_name(static_cast<std::size_t>(k)));
  return grad;
}

}  // namespace volfc::nn
