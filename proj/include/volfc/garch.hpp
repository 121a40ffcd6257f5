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

// GARCH(p, q) with a constant mean:
//
//   r_t = mu + eps_t
//   sigma_t^2 = omega + sum_{i=1..q} alpha_i eps_{t-i}^2 + sum_{j=1..p} beta_j sigma_{t-j}^2
//
// estimated by Gaussian quasi maximum likelihood. Fitting works on returns
// multiplied by `FitOptions::scale` (percent returns by default); fitted
// parameters, log-likelihood and AIC are in those scaled units, forecasts are
// reported back in raw-return units.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "volfc/common.hpp"
#include "volfc/io.hpp"
#include "volfc/optim.hpp"
#include "volfc/timeseries.hpp"

namespace volfc::garch {

struct GarchParams {
  double omega = 0.0;
  std::vector<double> alpha;  // q ARCH coefficients, alpha[0] multiplies eps_{t-1}^2
  std::vector<double> beta;   // p GARCH coefficients, beta[0] multiplies sigma_{t-1}^2
  double mean = 0.0;

  int p() const { return static_cast<int>(beta.size()); }
  int q() const { return static_cast<int>(alpha.size()); }

  double persistence() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    for (double b : beta) s += b;
    return s;
  }
  bool stationary() const { return persistence() < 1.0; }

  bool valid() const {
    if (!(omega > 0.0) || !std::isfinite(omega) || !std::isfinite(mean)) return false;
    for (double a : alpha)
      if (!(a >= 0.0) || !std::isfinite(a)) return false;
    for (double b : beta)
      if (!(b >= 0.0) || !std::isfinite(b)) return false;
    return true;
  }
};

struct GarchFit {
  GarchParams params;
  double loglik = 0.0;
  double aic = 0.0;
  int k = 0;
  bool converged = false;
  int p = 0;
  int q = 0;
  double scale = 100.0;  // returns were multiplied by this before estimation
  std::size_t nobs = 0;
  int iterations = 0;

  bool stationary() const { return params.stationary(); }
};

inline int free_parameters(int p, int q) { return 1 + 1 + q + p; }

inline double aic_of(int k, double loglik) { return 2.0 * k - 2.0 * loglik; }

/// Mean of squared residuals, used to seed every pre-sample lag.
inline double presample_variance(std::span<const double> r, double mean) {
  double s = 0.0;
  for (double v : r) s += (v - mean) * (v - mean);
  return s / static_cast<double>(r.size());
}

/// sigma_t^2 for every t in `r`. Pre-sample eps^2 and sigma^2 lags take the
/// value `presample`, or the residual variance when not given.
inline std::vector<double> conditional_variance(const GarchParams& params, std::span<const double> r,
                                                std::optional<double> presample = std::nullopt) {
  if (!params.valid()) throw NumericError("conditional_variance: invalid parameters");
  const std::size_t p = params.beta.size(), q = params.alpha.size();
  if (r.size() <= std::max(p, q)) throw DataError("conditional_variance: series too short for order");
  const double seed = presample ? *presample : presample_variance(r, params.mean);
  std::vector<double> s2(r.size());
  for (std::size_t t = 0; t < r.size(); ++t) {
    double v = params.omega;
    for (std::size_t i = 1; i <= q; ++i) {
      const double e2 = t >= i ? (r[t - i] - params.mean) * (r[t - i] - params.mean) : seed;
      v += params.alpha[i - 1] * e2;
    }
    for (std::size_t j = 1; j <= p; ++j) v += params.beta[j - 1] * (t >= j ? s2[t - j] : seed);
    if (!std::isfinite(v) || !(v > 0.0))
      throw NumericError("conditional_variance: non-finite or non-positive value at t=" + std::to_string(t));
    s2[t] = v;
  }
  return s2;
}

inline std::vector<double> conditional_variance(const GarchParams& params, const ReturnSeries& r,
                                                std::optional<double> presample = std::nullopt) {
  return conditional_variance(params, std::span<const double>(r.values), presample);
}

namespace detail {

// Likelihood kernel with the lag orders fixed at compile time so the recent
// eps^2 / sigma^2 lags stay in registers. Log terms are accumulated as
// products in short blocks.
template <int P, int Q>
double neg_loglik_kernel(const GarchParams& prm, std::span<const double> r, std::vector<double>& buf) {
  const std::size_t n = r.size();
  const double mu = prm.mean;
  buf.resize(n);
  double* e2 = buf.data();
  double seed = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double e = r[t] - mu;
    e2[t] = e * e;
    seed += e2[t];
  }
  seed /= static_cast<double>(n);
  std::array<double, Q + 1> a{}, el{};
  std::array<double, P + 1> b{}, sl{};
  for (int i = 0; i < Q; ++i) a[i] = prm.alpha[i];
  for (int j = 0; j < P; ++j) b[j] = prm.beta[j];
  el.fill(seed);  // el[i] = eps^2_{t-1-i}
  sl.fill(seed);  // sl[j] = sigma^2_{t-1-j}
  const double omega = prm.omega;
  double sum_ratio = 0.0, sum_log = 0.0, prod = 1.0;
  int block = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double v = omega;
    for (int i = 0; i < Q; ++i) v += a[i] * el[i];
    for (int j = P - 1; j >= 0; --j) v += b[j] * sl[j];
    if (!(v > 0.0) || !(v < std::numeric_limits<double>::infinity()))
      return std::numeric_limits<double>::infinity();
    for (int j = P - 1; j > 0; --j) sl[j] = sl[j - 1];
    if constexpr (P > 0) sl[0] = v;
    for (int i = Q - 1; i > 0; --i) el[i] = el[i - 1];
    if constexpr (Q > 0) el[0] = e2[t];
    sum_ratio += e2[t] / v;
    prod *= v;
    if (++block == 16 || prod > 1e150 || prod < 1e-150) {
      sum_log += std::log(prod);
      prod = 1.0;
      block = 0;
    }
  }
  sum_log += std::log(prod);
  const double nll = 0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + sum_log + sum_ratio);
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

// Same computation for arbitrary orders.
inline double neg_loglik_generic(const GarchParams& prm, std::span<const double> r, std::vector<double>& buf) {
  const std::size_t p = prm.beta.size(), q = prm.alpha.size();
  const std::size_t n = r.size();
  const std::size_t m = std::max(p, q);
  const double mu = prm.mean;
  // Layout: [m pre-sample slots | n values] for eps^2 and for sigma^2.
  buf.resize(2 * (n + m));
  double* e2 = buf.data();
  double* s2 = buf.data() + n + m;
  double seed = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double e = r[t] - mu;
    e2[m + t] = e * e;
    seed += e * e;
  }
  seed /= static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) e2[i] = s2[i] = seed;
  double sum_ratio = 0.0, sum_log = 0.0, prod = 1.0;
  int block = 0;
  for (std::size_t t = m; t < n + m; ++t) {
    double v = prm.omega;
    for (std::size_t i = 0; i < q; ++i) v += prm.alpha[i] * e2[t - 1 - i];
    for (std::size_t j = 0; j < p; ++j) v += prm.beta[j] * s2[t - 1 - j];
    if (!(v > 0.0) || !(v < std::numeric_limits<double>::infinity()))
      return std::numeric_limits<double>::infinity();
    s2[t] = v;
    sum_ratio += e2[t] / v;
    prod *= v;
    if (++block == 16 || prod > 1e150 || prod < 1e-150) {
      sum_log += std::log(prod);
      prod = 1.0;
      block = 0;
    }
  }
  sum_log += std::log(prod);
  const double nll = 0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + sum_log + sum_ratio);
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

using KernelFn = double (*)(const GarchParams&, std::span<const double>, std::vector<double>&);

template <int P, int... Qs>
constexpr std::array<KernelFn, sizeof...(Qs)> kernel_row(std::integer_sequence<int, Qs...>) {
  return {&neg_loglik_kernel<P, Qs>...};
}

template <int... Ps>
constexpr std::array<std::array<KernelFn, 5>, sizeof...(Ps)> kernel_table(std::integer_sequence<int, Ps...>) {
  return {kernel_row<Ps>(std::make_integer_sequence<int, 5>{})...};
}

inline double neg_loglik_fast(const GarchParams& prm, std::span<const double> r, std::vector<double>& buf) {
  static constexpr auto table = kernel_table(std::make_integer_sequence<int, 5>{});
  const auto p = prm.beta.size(), q = prm.alpha.size();
  if (p <= 4 && q <= 4) return table[p][q](prm, r, buf);
  return neg_loglik_generic(prm, r, buf);
}

// Unconstrained vector -> parameters:
//   x = [log omega, u_1..u_q, v_1..v_p, mean]
//   alpha_i = u_i^2 / (1 + S), beta_j = v_j^2 / (1 + S),  S = sum u^2 + sum v^2.
// Coefficients are non-negative, sum below one, and reach exactly zero at an
// interior point (u = 0), so boundary optima remain reachable by the simplex.
inline GarchParams decode(const std::vector<double>& x, int p, int q) {
  GarchParams prm;
  prm.omega = std::exp(x[0]);
  prm.alpha.resize(q);
  prm.beta.resize(p);
  double s = 0.0;
  for (int i = 0; i < q; ++i) s += (prm.alpha[i] = x[1 + i] * x[1 + i]);
  for (int j = 0; j < p; ++j) s += (prm.beta[j] = x[1 + q + j] * x[1 + q + j]);
  for (double& a : prm.alpha) a /= 1.0 + s;
  for (double& b : prm.beta) b /= 1.0 + s;
  prm.mean = x[1 + q + p];
  return prm;
}

inline std::vector<double> encode(const GarchParams& prm) {
  const int p = prm.p(), q = prm.q();
  std::vector<double> x(2 + p + q);
  x[0] = std::log(prm.omega);
  const double total = std::min(prm.persistence(), 0.999);
  const double scale = 1.0 / (1.0 - total);  // u^2 = coefficient * (1 + S)
  for (int i = 0; i < q; ++i) x[1 + i] = std::sqrt(prm.alpha[i] * scale);
  for (int j = 0; j < p; ++j) x[1 + q + j] = std::sqrt(prm.beta[j] * scale);
  x[1 + q + p] = prm.mean;
  return x;
}

}  // namespace detail

/// Negative Gaussian log-likelihood,
///   sum_t [ ln(2 pi)/2 + ln(sigma_t^2)/2 + eps_t^2 / (2 sigma_t^2) ].
/// Returns +inf when the recursion leaves the positive reals.
inline double neg_loglik(const GarchParams& params, std::span<const double> r) {
  if (!params.valid()) return std::numeric_limits<double>::infinity();
  std::vector<double> buf;
  return detail::neg_loglik_fast(params, r, buf);
}

inline double neg_loglik(const GarchParams& params, const ReturnSeries& r) {
  return neg_loglik(params, std::span<const double>(r.values));
}

struct FitOptions {
  double scale = 100.0;
  int restarts = 5;  // total Nelder-Mead runs; the first starts from `start` or a heuristic point
  optim::NelderMeadOptions nm{};
  std::uint64_t seed = 20240521;
  std::optional<GarchParams> start;  // in scaled units
};

inline GarchFit fit(std::span<const double> raw, int p, int q, const FitOptions& opt = {}) {
  if (p < 0 || q < 0 || p > 8 || q > 8 || p + q < 1)
    throw UsageError("garch fit: orders must satisfy 0 <= p,q <= 8 and p+q >= 1");
  if (raw.size() < 50) throw DataError("garch fit: need at least 50 returns");

  std::vector<double> r(raw.begin(), raw.end());
  for (double& v : r) v *= opt.scale;
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  const double var = presample_variance(r, mean);
  if (!(var > 0.0) || !std::isfinite(var)) throw DataError("garch fit: degenerate (constant) returns");
  const double sd = std::sqrt(var);

  auto heuristic = [&](double a_tot, double b_tot) {
    GarchParams g;
    if (p == 0) b_tot = 0.0;
    if (q == 0) a_tot = 0.0;
    g.omega = var * std::max(1.0 - a_tot - b_tot, 0.01);
    g.alpha.assign(q, q > 0 ? a_tot / q : 0.0);
    g.beta.assign(p, p > 0 ? b_tot / p : 0.0);
    g.mean = mean;
    return g;
  };

  std::vector<double> steps(2 + p + q, 0.5);
  steps[0] = 0.5;
  steps[1 + q + p] = 0.1 * sd;

  std::vector<double> buf;
  auto objective = [&](const std::vector<double>& x) {
    return detail::neg_loglik_fast(detail::decode(x, p, q), r, buf);
  };

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  optim::NelderMeadResult best;
  bool have = false;
  for (int run = 0; run < std::max(opt.restarts, 1); ++run) {
    GarchParams start;
    if (run == 0) {
      start = opt.start ? *opt.start : heuristic(p > 0 ? 0.08 : 0.3, 0.88);
      if (start.p() != p || start.q() != q || !start.valid()) start = heuristic(p > 0 ? 0.08 : 0.3, 0.88);
    } else {
      const double persist = 0.3 + 0.69 * unif(rng);
      const double share = 0.05 + 0.9 * unif(rng);
      start = heuristic(persist * share, persist * (1.0 - share));
      start.mean = mean + (unif(rng) - 0.5) * 0.2 * sd;
    }
    auto res = optim::nelder_mead(objective, detail::encode(start), steps, opt.nm);
    if (!have || res.value < best.value || (res.value == best.value && res.converged && !best.converged)) {
      best = std::move(res);
      have = true;
    }
  }
  if (!std::isfinite(best.value)) throw NumericError("garch fit: likelihood never finite");

  GarchFit f;
  f.params = detail::decode(best.x, p, q);
  f.p = p;
  f.q = q;
  f.k = free_parameters(p, q);
  f.loglik = -best.value;
  f.aic = aic_of(f.k, f.loglik);
  f.converged = best.converged;
  f.scale = opt.scale;
  f.nobs = r.size();
  f.iterations = best.iterations;
  return f;
}

inline GarchFit fit(const ReturnSeries& r, int p, int q, const FitOptions& opt = {}) {
  return fit(std::span<const double>(r.values), p, q, opt);
}

/// Exhaustive AIC search over 0..p_max x 0..q_max (excluding (0,0)).
/// Only converged candidates compete; ties go to fewer parameters, then the
/// lexicographically smaller (p, q). Candidates are fitted on up to
/// `threads` workers (0 = hardware concurrency); the result does not depend
/// on the thread count.
inline GarchFit select_order(std::span<const double> r, int p_max, int q_max, const FitOptions& opt = {},
                             std::vector<GarchFit>* candidates = nullptr, unsigned threads = 0) {
  if (p_max < 0 || q_max < 0 || (p_max == 0 && q_max == 0))
    throw UsageError("select_order: p_max, q_max must be >= 0 and not both 0");
  std::vector<std::pair<int, int>> orders;
  for (int p = 0; p <= p_max; ++p)
    for (int q = 0; q <= q_max; ++q)
      if (p + q > 0) orders.emplace_back(p, q);

  std::vector<std::optional<GarchFit>> fits(orders.size());
  std::vector<std::exception_ptr> errors(orders.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < orders.size(); i = next++) {
      try {
        FitOptions o = opt;
        o.start.reset();
        fits[i] = fit(r, orders[i].first, orders[i].second, o);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(orders.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  auto better = [](const GarchFit& a, const GarchFit& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    if (a.k != b.k) return a.k < b.k;
    return std::pair(a.p, a.q) < std::pair(b.p, b.q);
  };
  std::optional<GarchFit> best;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    const GarchFit& f = *fits[i];
    if (candidates) candidates->push_back(f);
    if (f.converged && (!best || better(f, *best))) best = f;
  }
  if (!best) throw NumericError("select_order: no candidate converged");
  return *best;
}

inline GarchFit select_order(const ReturnSeries& r, int p_max, int q_max, const FitOptions& opt = {},
                             std::vector<GarchFit>* candidates = nullptr, unsigned threads = 0) {
  return select_order(std::span<const double>(r.values), p_max, q_max, opt, candidates, threads);
}

/// One-step-ahead conditional variance in the units of `r` (already scaled),
/// continuing the in-sample recursion past the last observation.
inline double next_variance(const GarchParams& prm, std::span<const double> r,
                            std::optional<double> presample = std::nullopt) {
  const auto s2 = conditional_variance(prm, r, presample);
  const double seed = presample ? *presample : presample_variance(r, prm.mean);
  const std::size_t n = r.size();
  double v = prm.omega;
  for (std::size_t i = 1; i <= prm.alpha.size(); ++i) {
    const double e2 = n >= i ? (r[n - i] - prm.mean) * (r[n - i] - prm.mean) : seed;
    v += prm.alpha[i - 1] * e2;
  }
  for (std::size_t j = 1; j <= prm.beta.size(); ++j) v += prm.beta[j - 1] * (n >= j ? s2[n - j] : seed);
  return v;
}

/// sigma_{t+1} in raw-return units given raw returns through t.
inline double forecast_one_step(const GarchFit& f, std::span<const double> raw) {
  if (raw.size() <= static_cast<std::size_t>(std::max(f.p, f.q)))
    throw DataError("forecast_one_step: not enough returns for the model order");
  std::vector<double> r(raw.begin(), raw.end());
  for (double& v : r) v *= f.scale;
  return std::sqrt(next_variance(f.params, r)) / f.scale;
}

inline double forecast_one_step(const GarchFit& f, const ReturnSeries& r) {
  return forecast_one_step(f, std::span<const double>(r.values));
}

/// Simulated returns r_t = mean + sigma_t z_t, z_t ~ N(0,1), after a 500-draw
/// burn-in started at the unconditional variance.
inline ReturnSeries simulate(const GarchParams& prm, std::size_t n, std::uint64_t seed) {
  if (!prm.valid()) throw UsageError("simulate: invalid parameters");
  if (!prm.stationary()) throw UsageError("simulate: parameters are not covariance stationary");
  if (n < 1) throw UsageError("simulate: n must be >= 1");
  constexpr std::size_t kBurnIn = 500;
  const std::size_t p = prm.beta.size(), q = prm.alpha.size();
  const double uncond = prm.omega / (1.0 - prm.persistence());
  std::vector<double> e2(q, uncond), s2(p, uncond);  // most recent first
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  ReturnSeries out;
  out.kind = ReturnKind::kLog;
  out.values.reserve(n);
  for (std::size_t t = 0; t < n + kBurnIn; ++t) {
    double v = prm.omega;
    for (std::size_t i = 0; i < q; ++i) v += prm.alpha[i] * e2[i];
    for (std::size_t j = 0; j < p; ++j) v += prm.beta[j] * s2[j];
    const double eps = std::sqrt(v) * z(rng);
    if (q > 0) {
      std::rotate(e2.rbegin(), e2.rbegin() + 1, e2.rend());
      e2[0] = eps * eps;
    }
    if (p > 0) {
      std::rotate(s2.rbegin(), s2.rbegin() + 1, s2.rend());
      s2[0] = v;
    }
    if (t >= kBurnIn) out.values.push_back(prm.mean + eps);
  }
  out.dates = business_days(Date{2000, 1, 3}, n);
  return out;
}

inline void to_kv(const GarchFit& f, io::KeyValue& kv, const std::string& prefix = "garch.") {
  kv.set(prefix + "p", f.p);
  kv.set(prefix + "q", f.q);
  kv.set(prefix + "omega", f.params.omega);
  for (int i = 0; i < f.q; ++i) kv.set(prefix + "alpha." + std::to_string(i + 1), f.params.alpha[i]);
  for (int j = 0; j < f.p; ++j) kv.set(prefix + "beta." + std::to_string(j + 1), f.params.beta[j]);
  kv.set(prefix + "mean", f.params.mean);
  kv.set(prefix + "scale", f.scale);
  kv.set(prefix + "nobs", f.nobs);
  kv.set(prefix + "loglik", f.loglik);
  kv.set(prefix + "aic", f.aic);
  kv.set(prefix + "k", f.k);
  kv.set(prefix + "converged", f.converged);
  kv.set(prefix + "stationary", f.stationary());
}

inline GarchFit from_kv(const io::KeyValue& kv, const std::string& prefix = "garch.") {
  GarchFit f;
  f.p = static_cast<int>(kv.get_int(prefix + "p"));
  f.q = static_cast<int>(kv.get_int(prefix + "q"));
  f.params.omega = kv.get_double(prefix + "omega");
  for (int i = 0; i < f.q; ++i) f.params.alpha.push_back(kv.get_double(prefix + "alpha." + std::to_string(i + 1)));
  for (int j = 0; j < f.p; ++j) f.params.beta.push_back(kv.get_double(prefix + "beta." + std::to_string(j + 1)));
  f.params.mean = kv.get_double(prefix + "mean");
  f.scale = kv.get_double(prefix + "scale");
  f.nobs = static_cast<std::size_t>(kv.get_int(prefix + "nobs"));
  f.loglik = kv.get_double(prefix + "loglik");
  f.aic = kv.get_double(prefix + "aic");
  f.k = static_cast<int>(kv.get_int(prefix + "k"));
  f.converged = kv.get_bool(prefix + "converged");
  return f;
}

}  // namespace volfc::garch
