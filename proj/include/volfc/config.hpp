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

// Experiment configuration files.
//
// Grammar (one entry per line, '#' starts a comment line):
//
//   [section]
//   key = value
//
// Keys are addressed as "section.key". The [sweep] section is special: each
// line names a scenario and the single override it applies,
//
//   [sweep]
//   mae_loss = network.loss = mae
//
// Unknown keys are rejected so that typos cannot silently fall back to a
// default.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "volfc/io.hpp"
#include "volfc/pipeline.hpp"

namespace volfc {

struct SweepScenario {
  std::string name;
  std::string key;    // section.key
  std::string value;
};

namespace detail {
// Defaults of the paper profile, in file order.
inline const std::vector<std::pair<std::string, std::string>>& default_entries() {
  static const std::vector<std::pair<std::string, std::string>> d{
      {"data.sp500", "data/sp500.csv"},
      {"data.vix", "data/vix_proxy.csv"},
      {"data.start", ""},
      {"data.end", ""},
      {"data.return_kind", "log"},
      {"data.vol_window", "22"},
      {"data.annualization", "1"},
      {"data.lookback", "22"},
      {"walkforward.initial_train", "3024"},
      {"walkforward.initial_val", "756"},
      {"walkforward.refit_stride", "252"},
      {"garch.p_max", "4"},
      {"garch.q_max", "4"},
      {"garch.selection_rows", "504"},
      {"garch.refit_stride", "1"},
      {"garch.restarts", "5"},
      {"network.layers", "2"},
      {"network.units", "128"},
      {"network.activation", "tanh"},
      {"network.dropout", "0.1"},
      {"network.recurrent_dropout", "0.1"},
      {"network.output_activation", "relu"},
      {"network.learning_rate", "0.001"},
      {"network.loss", "mse"},
      {"network.epochs", "100"},
      {"network.batch_size", "64"},
      {"network.patience", "10"},
      {"tuner.enabled", "false"},
      {"tuner.trials", "50"},
      {"tuner.executions", "3"},
      {"tuner.epochs", "50"},
      {"run.seed", "42"},
      {"run.variants", "GARCH,LSTM,LSTM_GARCH,LSTM_GARCH_VIX"},
      {"run.sweep_variant", "LSTM_GARCH_VIX"},
  };
  return d;
}

// Overrides applied by the desk profile.
inline const std::vector<std::pair<std::string, std::string>>& desk_entries() {
  static const std::vector<std::pair<std::string, std::string>> d{
      {"data.start", "2000-01-01"},
      {"data.end", "2016-12-31"},
      {"walkforward.initial_train", "1512"},
      {"walkforward.initial_val", "504"},
      {"walkforward.refit_stride", "252"},
      {"garch.refit_stride", "22"},
      {"network.units", "16"},
      {"network.epochs", "20"},
      {"tuner.trials", "4"},
      {"tuner.executions", "1"},
      {"tuner.epochs", "5"},
  };
  return d;
}
}  // namespace detail

enum class Profile { kPaper, kDesk };

inline Profile parse_profile(const std::string& s) {
  if (s == "paper") return Profile::kPaper;
  if (s == "desk") return Profile::kDesk;
  throw UsageError("unknown profile '" + s + "' (expected paper|desk)");
}

inline const char* to_string(Profile p) { return p == Profile::kPaper ? "paper" : "desk"; }

/// Flat view of an experiment: every known key with a value, plus the sweep.
class ExperimentConfig {
 public:
  explicit ExperimentConfig(Profile profile = Profile::kPaper) {
    for (const auto& [k, v] : detail::default_entries()) kv_.set(k, v);
    if (profile == Profile::kDesk)
      for (const auto& [k, v] : detail::desk_entries()) kv_.set(k, v);
    kv_.set("run.profile", to_string(profile));
  }

  /// Applies a config file on top of the profile defaults.
  void merge_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = io::trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto where = [&] { return "config line " + std::to_string(lineno) + ": "; };
      if (t.front() == '[') {
        if (t.back() != ']') throw UsageError(where() + "unterminated section header");
        section = io::trim(std::string_view(t).substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw UsageError(where() + "expected 'key = value'");
      const std::string key = io::trim(std::string_view(t).substr(0, eq));
      const std::string value = io::trim(std::string_view(t).substr(eq + 1));
      if (section.empty()) throw UsageError(where() + "key outside any section");
      if (section == "sweep") {
        const auto eq2 = value.find('=');
        if (eq2 == std::string::npos) throw UsageError(where() + "sweep entries read 'name = section.key = value'");
        SweepScenario s{key, io::trim(std::string_view(value).substr(0, eq2)),
                        io::trim(std::string_view(value).substr(eq2 + 1))};
        if (!kv_.contains(s.key) || s.key == "run.profile")
          throw UsageError(where() + "sweep scenario '" + key + "' overrides unknown key '" + s.key + "'");
        for (const auto& o : sweep_)
          if (o.name == s.name) throw UsageError(where() + "duplicate sweep scenario '" + key + "'");
        sweep_.push_back(std::move(s));
        continue;
      }
      set(section + "." + key, value, where());
    }
    validate();
  }

  void set(const std::string& key, const std::string& value, const std::string& context = "") {
    if (!kv_.contains(key) || key == "run.profile") throw UsageError(context + "unknown config key '" + key + "'");
    kv_.set(key, value);
  }

  const io::KeyValue& values() const { return kv_; }
  const std::vector<SweepScenario>& sweep() const { return sweep_; }
  void clear_sweep() { sweep_.clear(); }

  std::string get(const std::string& key) const { return kv_.get(key); }
  long long get_int(const std::string& key) const {
    try {
      return kv_.get_int(key);
    } catch (const DataError&) {
      throw UsageError("config key '" + key + "' must be an integer");
    }
  }
  double get_double(const std::string& key) const {
    try {
      return kv_.get_double(key);
    } catch (const DataError&) {
      throw UsageError("config key '" + key + "' must be numeric");
    }
  }
  bool get_bool(const std::string& key) const {
    try {
      return kv_.get_bool(key);
    } catch (const DataError&) {
      throw UsageError("config key '" + key + "' must be true or false");
    }
  }

  std::uint64_t seed() const {
    const long long s = get_int("run.seed");
    if (s < 0) throw UsageError("run.seed must be >= 0");
    return static_cast<std::uint64_t>(s);
  }

  std::optional<Date> start() const { return date_or_none("data.start"); }
  std::optional<Date> end() const { return date_or_none("data.end"); }

  std::vector<pipeline::ModelVariant> variants() const {
    std::vector<pipeline::ModelVariant> out;
    for (const auto& s : io::split_csv_line(get("run.variants"))) {
      const std::string t = io::trim(s);
      if (!t.empty()) out.push_back(pipeline::parse_variant(t));
    }
    if (out.empty()) throw UsageError("run.variants is empty");
    return out;
  }

  nn::NetworkConfig network() const {
    nn::NetworkConfig c;
    const long long layers = get_int("network.layers");
    const long long units = get_int("network.units");
    if (layers < 1 || units < 1) throw UsageError("network.layers and network.units must be >= 1");
    const auto act = nn::parse_activation(get("network.activation"));
    c.layers.assign(static_cast<std::size_t>(layers), {static_cast<int>(units), act, get_double("network.dropout")});
    c.recurrent_dropout = get_double("network.recurrent_dropout");
    c.output_activation = nn::parse_activation(get("network.output_activation"));
    c.learning_rate = get_double("network.learning_rate");
    c.loss = nn::parse_loss(get("network.loss"));
    c.epochs = static_cast<int>(get_int("network.epochs"));
    c.batch_size = static_cast<int>(get_int("network.batch_size"));
    c.patience = static_cast<int>(get_int("network.patience"));
    c.seed = seed();
    c.validate();
    return c;
  }

  pipeline::PipelineConfig pipeline() const {
    pipeline::PipelineConfig p;
    p.features.return_kind = parse_return_kind(get("data.return_kind"));
    p.features.vol_window = static_cast<int>(get_int("data.vol_window"));
    p.features.annualization = get_double("data.annualization");
    p.lookback = static_cast<int>(get_int("data.lookback"));
    auto positive = [&](const char* key) {
      const long long v = get_int(key);
      if (v < 1) throw UsageError(std::string(key) + " must be >= 1");
      return static_cast<std::size_t>(v);
    };
    p.wf.initial_train = positive("walkforward.initial_train");
    p.wf.initial_val = positive("walkforward.initial_val");
    p.wf.refit_stride = positive("walkforward.refit_stride");
    p.garch.p_max = static_cast<int>(get_int("garch.p_max"));
    p.garch.q_max = static_cast<int>(get_int("garch.q_max"));
    p.garch.selection_rows = positive("garch.selection_rows");
    p.garch.refit_stride = positive("garch.refit_stride");
    p.garch.fit.restarts = static_cast<int>(positive("garch.restarts"));
    p.net = network();
    if (p.lookback < 1) throw UsageError("data.lookback must be >= 1");
    if (p.features.vol_window < 2) throw UsageError("data.vol_window must be >= 2");
    return p;
  }

  void validate() const {
    (void)pipeline();
    (void)variants();
    (void)pipeline::parse_variant(get("run.sweep_variant"));
    (void)get_bool("tuner.enabled");
    (void)start();
    (void)end();
  }

  /// Copy with one scenario's override applied (and no sweep of its own).
  ExperimentConfig with(const SweepScenario& s) const {
    ExperimentConfig c = *this;
    c.sweep_.clear();
    c.set(s.key, s.value);
    c.validate();
    return c;
  }

  /// "key = value" echo of every setting; this is what manifests record.
  std::string echo() const { return kv_.str(); }

  /// Sectioned file that merge_text() reads back to the same settings.
  std::string to_text() const {
    std::string out, section;
    for (const auto& [key, value] : kv_.entries()) {
      if (key == "run.profile") continue;
      const auto dot = key.find('.');
      const std::string sec = key.substr(0, dot);
      if (sec != section) {
        out += (out.empty() ? "[" : "\n[") + sec + "]\n";
        section = sec;
      }
      out += key.substr(dot + 1) + " = " + value + "\n";
    }
    if (!sweep_.empty()) {
      out += "\n[sweep]\n";
      for (const auto& x : sweep_) out += x.name + " = " + x.key + " = " + x.value + "\n";
    }
    return out;
  }

  Profile profile() const { return parse_profile(get("run.profile")); }

 private:
  std::optional<Date> date_or_none(const std::string& key) const {
    const std::string v = get(key);
    if (v.empty()) return std::nullopt;
    try {
      return Date::parse(v);
    } catch (const Error&) {
      throw UsageError("config key '" + key + "' is not a YYYY-MM-DD date");
    }
  }

  io::KeyValue kv_;
  std::vector<SweepScenario> sweep_;
};

/// The seven single-change scenarios of the sensitivity study.
inline std::vector<SweepScenario> paper_sweep() {
  return {
      {"mae_loss", "network.loss", "mae"},
      {"pct_change_input", "data.return_kind", "pct"},
      {"lookback_5", "data.lookback", "5"},
      {"lookback_66", "data.lookback", "66"},
      {"one_layer", "network.layers", "1"},
      {"three_layers", "network.layers", "3"},
      {"relu_relu", "network.activation", "relu"},
  };
}

inline std::string sweep_block(const std::vector<SweepScenario>& s) {
  std::string out = "[sweep]\n";
  for (const auto& x : s) out += x.name + " = " + x.key + " = " + x.value + "\n";
  return out;
}

}  // namespace volfc
