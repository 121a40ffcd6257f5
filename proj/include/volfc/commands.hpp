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

// Subcommand bodies shared by the command-line tool and the tests. Every
// command writes its outputs plus a manifest into an output directory and
// returns a process exit code (0 ok, 1 usage, 2 data, 3 numeric).

#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "volfc/adf.hpp"
#include "volfc/config.hpp"
#include "volfc/evaluate.hpp"
#include "volfc/explain.hpp"
#include "volfc/garch.hpp"
#include "volfc/io.hpp"
#include "volfc/neural.hpp"
#include "volfc/pipeline.hpp"
#include "volfc/timeseries.hpp"

namespace volfc::cli {

inline constexpr const char* kVersion = "volfc 1.0.0";

namespace fs = std::filesystem;

struct Options {
  std::string out = "out";
  bool strict = false;
  unsigned threads = 1;
  std::ostream* log = &std::cerr;
};

inline std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

inline PriceSeries clip(const PriceSeries& p, std::optional<Date> start, std::optional<Date> end) {
  std::vector<Date> d;
  std::vector<double> c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (start && p.dates()[i] < *start) continue;
    if (end && *end < p.dates()[i]) continue;
    d.push_back(p.dates()[i]);
    c.push_back(p.close()[i]);
  }
  if (d.empty()) throw DataError("no prices inside the configured date span");
  return PriceSeries(std::move(d), std::move(c));
}

/// Content hash of a series (dates and closes as written to CSV).
inline std::string series_hash(const PriceSeries& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += p.dates()[i].iso() + "," + io::format_double(p.close()[i]) + "\n";
  return io::fnv1a_hex(s);
}

inline PriceSeries load_prices(const std::string& path, bool strict, std::ostream& log) {
  IngestResult r = ingest_csv(path);
  if (!r.skipped.empty()) {
    log << path << ": skipped " << r.skipped.size() << " row(s)\n";
    for (const auto& s : r.skipped) log << "  line " << s.line << ": " << s.reason << "\n";
    if (strict) throw DataError(path + ": malformed rows present (strict mode)");
  }
  return r.series;
}

/// Prices named by the config, clipped to its date span.
inline pipeline::MarketData load_market_data(const ExperimentConfig& cfg, const Options& opt) {
  pipeline::MarketData d;
  d.sp500 = clip(load_prices(cfg.get("data.sp500"), opt.strict, *opt.log), cfg.start(), cfg.end());
  const std::string vix = cfg.get("data.vix");
  if (!vix.empty()) d.vix = clip(load_prices(vix, opt.strict, *opt.log), cfg.start(), cfg.end());
  return d;
}

/// Inputs-only manifest: settings, seeds, data hashes, version.
inline io::KeyValue manifest(const ExperimentConfig& cfg, const pipeline::MarketData* data, const std::string& command) {
  io::KeyValue kv;
  for (const auto& [k, v] : cfg.values().entries()) kv.set("config." + k, v);
  kv.set("command", command);
  kv.set("version", kVersion);
  if (data) {
    kv.set("data.sp500_hash", series_hash(data->sp500));
    kv.set("data.sp500_rows", data->sp500.size());
    if (data->vix) {
      kv.set("data.vix_hash", series_hash(*data->vix));
      kv.set("data.vix_rows", data->vix->size());
    }
  }
  const auto seed = cfg.seed();
  kv.set("seed.master", std::to_string(seed));
  for (auto v : pipeline::kAllVariants)
    kv.set(std::string("seed.") + pipeline::to_string(v), std::to_string(pipeline::variant_seed(seed, v)));
  return kv;
}

template <typename F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 3;
  }
}

// ---------------------------------------------------------------------------
// ingest

/// Validates one or two price files and writes cleaned copies plus, for a
/// pair, the date-joined dataset.
inline int cmd_ingest(const std::string& sp500_path, const std::string& vix_path, const Options& opt,
                      const ColumnMap& sp500_cols = {}, const ColumnMap& vix_cols = {}) {
  return guarded(*opt.log, [&] {
    ensure_dir(opt.out);
    io::KeyValue kv;
    kv.set("command", "ingest");
    kv.set("version", kVersion);
    std::string report;
    auto one = [&](const std::string& path, const std::string& tag, const ColumnMap& cols) {
      IngestResult r = ingest_csv(path, cols);
      kv.set(tag + ".source", path);
      kv.set(tag + ".rows", r.series.size());
      kv.set(tag + ".skipped", r.skipped.size());
      kv.set(tag + ".hash", series_hash(r.series));
      kv.set(tag + ".first_date", r.series.dates().front().iso());
      kv.set(tag + ".last_date", r.series.dates().back().iso());
      for (const auto& s : r.skipped) report += tag + "," + std::to_string(s.line) + ",\"" + s.reason + "\"\n";
      if (!r.skipped.empty())
        *opt.log << path << ": skipped " << r.skipped.size() << " malformed row(s), see ingest_report.csv\n";
      write_price_csv(path_in(opt.out, tag + ".csv"), r.series);
      return r;
    };
    const IngestResult sp = one(sp500_path, "sp500", sp500_cols);
    std::size_t skipped = sp.skipped.size();
    if (!vix_path.empty()) {
      const IngestResult vx = one(vix_path, "vix", vix_cols);
      skipped += vx.skipped.size();
      const JoinedColumns j = inner_join({{&sp.series.dates(), &sp.series.close()}, {&vx.series.dates(), &vx.series.close()}});
      if (j.dates.empty()) throw DataError("ingest: S&P and VIX files share no dates");
      std::string csv = "Date,Close,VIX\n";
      for (std::size_t i = 0; i < j.dates.size(); ++i)
        csv += j.dates[i].iso() + "," + io::format_double(j.columns[0][i]) + "," + io::format_double(j.columns[1][i]) + "\n";
      io::write_file(path_in(opt.out, "dataset.csv"), csv);
      kv.set("join.rows", j.dates.size());
      kv.set("join.dropped_sp500", j.dropped[0]);
      kv.set("join.dropped_vix", j.dropped[1]);
      kv.set("data.hash", io::fnv1a_hex(csv));
      *opt.log << "joined " << j.dates.size() << " rows; join dropped " << j.dropped[0] << " S&P and " << j.dropped[1]
               << " VIX rows\n";
    } else {
      kv.set("data.hash", series_hash(sp.series));
    }
    io::write_file(path_in(opt.out, "ingest_report.csv"), "file,line,reason\n" + report);
    io::write_file(path_in(opt.out, "manifest.txt"), kv.str());
    if (opt.strict && skipped > 0) throw DataError("ingest: malformed rows present (strict mode)");
    return 0;
  });
}

// ---------------------------------------------------------------------------
// fit-garch

inline int cmd_fit_garch(const ExperimentConfig& cfg, const Options& opt) {
  return guarded(*opt.log, [&] {
    ensure_dir(opt.out);
    const pipeline::MarketData data = load_market_data(cfg, opt);
    const ReturnSeries r = log_returns(data.sp500);
    garch::FitOptions fo;
    fo.restarts = static_cast<int>(cfg.get_int("garch.restarts"));
    std::vector<garch::GarchFit> cands;
    const garch::GarchFit best = garch::select_order(r, static_cast<int>(cfg.get_int("garch.p_max")),
                                                     static_cast<int>(cfg.get_int("garch.q_max")), fo, &cands,
                                                     opt.threads);
    io::KeyValue fit;
    garch::to_kv(best, fit);
    fit.set("garch.next_sigma", garch::forecast_one_step(best, r));
    io::write_file(path_in(opt.out, "garch_fit.txt"), fit.str());

    std::string csv = "p,q,k,loglik,aic,converged,stationary,persistence\n";
    for (const auto& f : cands)
      csv += std::to_string(f.p) + "," + std::to_string(f.q) + "," + std::to_string(f.k) + "," +
             io::format_double(f.loglik) + "," + io::format_double(f.aic) + "," + (f.converged ? "true" : "false") +
             "," + (f.stationary() ? "true" : "false") + "," + io::format_double(f.params.persistence()) + "\n";
    io::write_file(path_in(opt.out, "garch_candidates.csv"), csv);

    std::vector<double> logp;
    for (double c : data.sp500.close()) logp.push_back(std::log(c));
    const auto adf_r = garch::adf_test(r.values);
    const auto adf_p = garch::adf_test(logp);
    io::KeyValue adf;
    auto put = [&](const std::string& tag, const garch::AdfResult& a) {
      adf.set(tag + ".statistic", a.statistic);
      adf.set(tag + ".lags", a.lags);
      adf.set(tag + ".nobs", a.nobs);
      adf.set(tag + ".reject_1pct", a.reject_1);
      adf.set(tag + ".reject_5pct", a.reject_5);
      adf.set(tag + ".reject_10pct", a.reject_10);
    };
    put("returns", adf_r);
    put("log_prices", adf_p);
    io::write_file(path_in(opt.out, "adf.txt"), adf.str());

    io::KeyValue man = manifest(cfg, &data, "fit-garch");
    io::write_file(path_in(opt.out, "manifest.txt"), man.str());
    *opt.log << "selected GARCH(" << best.p << "," << best.q << ") aic " << best.aic << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// backtest

inline std::string predictions_file(pipeline::ModelVariant v) {
  return std::string("predictions_") + pipeline::to_string(v) + ".csv";
}

inline std::string garch_forecasts_csv(const pipeline::GarchForecasts& g) {
  std::string s = "date,sigma\n";
  for (std::size_t i = 0; i < g.dates.size(); ++i) s += g.dates[i].iso() + "," + io::format_double(g.values[i]) + "\n";
  return s;
}

inline pipeline::GarchForecasts read_garch_forecasts(const std::string& path) {
  IngestResult r = parse_price_csv(io::read_file(path), ColumnMap{"date", "sigma"}, path);
  if (!r.skipped.empty()) throw DataError(path + ": malformed rows");
  pipeline::GarchForecasts g;
  g.dates = r.series.dates();
  g.values = r.series.close();
  return g;
}

/// Runs every configured variant (or `only`) and writes predictions,
/// trained networks, the GARCH forecast column and manifests.
inline int run_backtest(const ExperimentConfig& cfg, const Options& opt,
                        const std::vector<pipeline::ModelVariant>& variants,
                        const pipeline::GarchForecasts* precomputed = nullptr,
                        std::map<pipeline::ModelVariant, pipeline::VariantOutcome>* outcomes = nullptr) {
  ensure_dir(opt.out);
  const pipeline::MarketData data = load_market_data(cfg, opt);
  pipeline::PipelineConfig pc = cfg.pipeline();
  // Absolute data paths keep config.txt usable from any working directory.
  ExperimentConfig saved = cfg;
  for (const char* key : {"data.sp500", "data.vix"})
    if (!cfg.get(key).empty()) saved.set(key, fs::absolute(cfg.get(key)).lexically_normal().string());
  io::write_file(path_in(opt.out, "config.txt"), saved.to_text());
  io::write_file(path_in(opt.out, "manifest.txt"), manifest(cfg, &data, "backtest").str());

  bool any_garch = false;
  for (auto v : variants) any_garch = any_garch || pipeline::needs_garch(v);
  std::optional<pipeline::GarchForecasts> g;
  if (any_garch) {
    g = precomputed ? *precomputed : pipeline::garch_feature(data.sp500, pc);
    io::write_file(path_in(opt.out, "garch_forecasts.csv"), garch_forecasts_csv(*g));
  }

  if (cfg.get_bool("tuner.enabled")) {
    // Tune on the first window of the richest network variant present.
    std::optional<pipeline::ModelVariant> target;
    for (auto v : variants)
      if (v != pipeline::ModelVariant::kGarch && !(pipeline::needs_vix(v) && !data.vix)) target = v;
    if (target) {
      const auto table = pipeline::shared_table(variants, data, pc, g ? &*g : nullptr)
                             .select(pipeline::variant_features(*target, pc.features.return_kind));
      const auto ds = pipeline::make_sequences(table, pc.lookback);
      auto [tr, va] = pipeline::first_window_sets(ds, pc.wf);
      nn::NetworkConfig base = pc.net;
      base.epochs = static_cast<int>(cfg.get_int("tuner.epochs"));
      const auto res = nn::random_search(nn::SearchSpace{}, base, tr, va, static_cast<int>(cfg.get_int("tuner.trials")),
                                         static_cast<int>(cfg.get_int("tuner.executions")), cfg.seed(), opt.threads);
      const int epochs = pc.net.epochs;
      pc.net = res.best;
      pc.net.epochs = epochs;
      io::KeyValue t;
      t.set("tuner.best_trial", res.best_trial);
      t.set("tuner.layers", pc.net.layers.size());
      t.set("tuner.units", pc.net.layers.front().units);
      t.set("tuner.activation", nn::to_string(pc.net.layers.front().activation));
      t.set("tuner.dropout", pc.net.layers.front().dropout);
      t.set("tuner.learning_rate", pc.net.learning_rate);
      t.set("tuner.loss", nn::to_string(pc.net.loss));
      for (std::size_t i = 0; i < res.trials.size(); ++i)
        t.set("tuner.trial" + std::to_string(i) + ".score", res.trials[i].score);
      io::write_file(path_in(opt.out, "tuner.txt"), t.str());
    }
  }

  auto results = pipeline::run_all(variants, data, pc, cfg.seed(), opt.threads, g ? &*g : nullptr);
  io::KeyValue summary;
  if (g) {
    summary.set("garch.p", g->p);
    summary.set("garch.q", g->q);
    summary.set("garch.refits", g->refits);
  }
  int code = 0;
  for (auto v : variants) {
    const auto& o = results[v];
    const std::string tag = std::string(pipeline::to_string(v)) + ".";
    if (!o.run) {
      summary.set(tag + "error", o.error);
      *opt.log << pipeline::to_string(v) << ": " << o.error << "\n";
      if (code == 0) code = o.exit_code;
      continue;
    }
    pipeline::describe(*o.run, summary, tag);
    io::write_file(path_in(opt.out, predictions_file(v)), pipeline::predictions_csv(*o.run));
    if (o.run->final_network)
      io::write_file(path_in(opt.out, std::string("network_") + pipeline::to_string(v) + ".txt"),
                     nn::save_text(*o.run->final_network));
    *opt.log << pipeline::to_string(v) << ": " << o.run->predictions.size() << " predictions over "
             << o.run->windows.size() << " windows\n";
  }
  io::write_file(path_in(opt.out, "run_summary.txt"), summary.str());
  if (outcomes) *outcomes = std::move(results);
  return code;
}

inline int cmd_backtest(const ExperimentConfig& cfg, const Options& opt) {
  return guarded(*opt.log, [&] { return run_backtest(cfg, opt, cfg.variants()); });
}

// ---------------------------------------------------------------------------
// evaluate / compare

/// Every predictions_<VARIANT>.csv found in `dir`, in variant order.
inline std::map<pipeline::ModelVariant, pipeline::WalkForwardRun> read_runs(const std::string& dir) {
  std::map<pipeline::ModelVariant, pipeline::WalkForwardRun> runs;
  for (auto v : pipeline::kAllVariants) {
    const std::string p = path_in(dir, predictions_file(v));
    if (fs::exists(p)) runs[v] = pipeline::read_predictions_csv(io::read_file(p), v);
  }
  if (runs.empty()) throw DataError("no predictions_*.csv files in '" + dir + "'");
  return runs;
}

/// Restricts all runs to their common dates so comparisons are paired.
inline std::size_t align_runs(std::map<pipeline::ModelVariant, pipeline::WalkForwardRun>& runs) {
  std::vector<Date> common = runs.begin()->second.dates();
  for (const auto& [v, r] : runs) {
    const auto d = r.dates();
    std::vector<Date> keep;
    std::set_intersection(common.begin(), common.end(), d.begin(), d.end(), std::back_inserter(keep));
    common = std::move(keep);
  }
  if (common.empty()) throw DataError("runs share no prediction dates");
  std::size_t dropped = 0;
  for (auto& [v, r] : runs) {
    std::vector<pipeline::Prediction> kept;
    std::size_t k = 0;
    for (const auto& p : r.predictions) {
      while (k < common.size() && common[k] < p.date) ++k;
      if (k < common.size() && common[k] == p.date) kept.push_back(p);
      else ++dropped;
    }
    r.predictions = std::move(kept);
  }
  return dropped;
}

inline std::string label(pipeline::ModelVariant v) {
  switch (v) {
    case pipeline::ModelVariant::kGarch: return "GARCH";
    case pipeline::ModelVariant::kLstm: return "LSTM";
    case pipeline::ModelVariant::kLstmGarch: return "LSTM-GARCH";
    case pipeline::ModelVariant::kLstmGarchVix: return "LSTM-GARCH with VIX input";
  }
  return "?";
}

inline int cmd_evaluate(const std::string& run_dir, const Options& opt) {
  return guarded(*opt.log, [&] {
    auto runs = read_runs(run_dir);
    ensure_dir(opt.out);
    std::string csv = "variant,segment,mae,rmse,count\n";
    std::vector<std::vector<std::string>> rows;
    std::string dir_csv = "variant,horizon,accuracy_pct\n";
    for (const auto& [v, r] : runs) {
      const auto rep = eval::quartile_metrics(r.forecasts(), r.actuals(), pipeline::to_string(v));
      for (const auto& s : rep.segments) {
        csv += std::string(pipeline::to_string(v)) + "," + s.segment + "," + io::format_double(s.mae) + "," +
               io::format_double(s.rmse) + "," + std::to_string(s.count) + "\n";
        rows.push_back({label(v), s.segment, eval::sci(s.mae), eval::sci(s.rmse), std::to_string(s.count)});
      }
      for (std::size_t h : {1u, 5u, 22u})
        if (r.predictions.size() > h)
          dir_csv += std::string(pipeline::to_string(v)) + "," + std::to_string(h) + "," +
                     io::format_double(eval::directional_accuracy(r.forecasts(), r.actuals(), h)) + "\n";
    }
    io::write_file(path_in(opt.out, "metrics.csv"), csv);
    io::write_file(path_in(opt.out, "directional.csv"), dir_csv);
    io::write_file(path_in(opt.out, "metrics.txt"), eval::format_table({"Model", "Segment", "MAE", "RMSE", "n"}, rows));
    *opt.log << eval::format_table({"Model", "Segment", "MAE", "RMSE", "n"}, rows);
    return 0;
  });
}

/// Tables in the layout of the paper's comparison section: overall errors,
/// rank tests and improvements of the focal model over the others, errors
/// by volatility quartile, directional accuracy.
inline std::string compare_report(std::map<pipeline::ModelVariant, pipeline::WalkForwardRun> runs,
                                  std::optional<pipeline::ModelVariant> focal, const std::string& csv_dir) {
  const std::size_t dropped = align_runs(runs);
  if (!focal) focal = runs.rbegin()->first;
  if (!runs.count(*focal)) throw DataError(std::string("compare: no run for ") + pipeline::to_string(*focal));
  std::ostringstream o;
  if (dropped) o << "note: " << dropped << " unpaired predictions dropped to align dates\n\n";
  const auto& fr = runs.at(*focal);
  o << "Out-of-sample error metrics (" << fr.predictions.front().date.iso() << " to "
    << fr.predictions.back().date.iso() << ", n = " << fr.predictions.size() << ")\n";
  std::vector<std::vector<std::string>> t7;
  std::map<pipeline::ModelVariant, eval::MetricReport> reports;
  for (const auto& [v, r] : runs) {
    reports[v] = eval::quartile_metrics(r.forecasts(), r.actuals(), pipeline::to_string(v));
    const auto& f = reports[v].at("full");
    t7.push_back({label(v), eval::sci(f.mae), eval::sci(f.rmse)});
  }
  o << eval::format_table({"Model", "MAE", "RMSE"}, t7) << "\n";

  std::string mw_csv = "focal,other,u,z,p,n,m\n";
  std::string imp_csv = "focal,other,segment,mae_improvement_pct,rmse_improvement_pct\n";
  std::vector<std::vector<std::string>> t8, t9;
  const auto fe = eval::absolute_errors(fr.forecasts(), fr.actuals());
  for (const auto& [v, r] : runs) {
    if (v == *focal) continue;
    const auto oe = eval::absolute_errors(r.forecasts(), r.actuals());
    const auto t = eval::mann_whitney_u(fe, oe);
    t8.push_back({label(*focal) + " vs. " + label(v), eval::fixed(t.u, 0),
                  t.p < 0.001 ? "<0.001" : eval::fixed(t.p, 3), std::to_string(t.n), std::to_string(t.m)});
    mw_csv += std::string(pipeline::to_string(*focal)) + "," + pipeline::to_string(v) + "," + io::format_double(t.u) +
              "," + io::format_double(t.z) + "," + io::format_double(t.p) + "," + std::to_string(t.n) + "," +
              std::to_string(t.m) + "\n";
    const auto imp = eval::improvement(reports.at(v), reports.at(*focal));
    t9.push_back({label(v), eval::fixed(imp.front().mae), eval::fixed(imp.front().rmse)});
    for (const auto& i : imp)
      imp_csv += std::string(pipeline::to_string(*focal)) + "," + pipeline::to_string(v) + "," + i.segment + "," +
                 io::format_double(i.mae) + "," + io::format_double(i.rmse) + "\n";
  }
  o << "Mann-Whitney U test on absolute errors\n"
    << eval::format_table({"Model Comparison", "U Statistic", "p-value", "n", "m"}, t8) << "\n";
  o << "Percentage improvement of " << label(*focal) << " over other models\n"
    << eval::format_table({"Compared Model", "% Improvement in MAE", "% Improvement in RMSE"}, t9) << "\n";

  static const char* names[] = {"Lowest", "Low-Medium", "Medium-High", "Highest"};
  std::vector<std::vector<std::string>> t10;
  std::string q_csv = "variant,segment,mae,rmse,count\n";
  for (int k = 0; k < 4; ++k) {
    const std::string seg = "Q" + std::to_string(k + 1);
    for (const auto& [v, rep] : reports) {
      const auto& s = rep.at(seg);
      t10.push_back({std::string(names[k]) + " Volatility Quartile: " + label(v), eval::sci(s.mae), eval::sci(s.rmse),
                     std::to_string(s.count)});
    }
  }
  for (const auto& [v, rep] : reports)
    for (const auto& s : rep.segments)
      q_csv += std::string(pipeline::to_string(v)) + "," + s.segment + "," + io::format_double(s.mae) + "," +
               io::format_double(s.rmse) + "," + std::to_string(s.count) + "\n";
  o << "Error metrics by volatility quartile\n" << eval::format_table({"Quartile / Model", "MAE", "RMSE", "n"}, t10) << "\n";

  std::vector<std::vector<std::string>> t11;
  std::string d_csv = "variant,horizon,accuracy_pct\n";
  for (const auto& [v, r] : runs) {
    std::vector<std::string> row{label(v)};
    for (std::size_t h : {1u, 5u, 22u}) {
      if (r.predictions.size() > h) {
        const double a = eval::directional_accuracy(r.forecasts(), r.actuals(), h);
        row.push_back(eval::fixed(a));
        d_csv += std::string(pipeline::to_string(v)) + "," + std::to_string(h) + "," + io::format_double(a) + "\n";
      } else {
        row.push_back("n/a");
      }
    }
    t11.push_back(row);
  }
  o << "Directional accuracy (%)\n" << eval::format_table({"Model", "1 day", "5 days", "22 days"}, t11);

  if (!csv_dir.empty()) {
    io::write_file(path_in(csv_dir, "mann_whitney.csv"), mw_csv);
    io::write_file(path_in(csv_dir, "improvement.csv"), imp_csv);
    io::write_file(path_in(csv_dir, "quartiles.csv"), q_csv);
    io::write_file(path_in(csv_dir, "directional.csv"), d_csv);
  }
  return o.str();
}

inline int cmd_compare(const std::string& run_dir, std::optional<pipeline::ModelVariant> focal, const Options& opt) {
  return guarded(*opt.log, [&] {
    auto runs = read_runs(run_dir);
    ensure_dir(opt.out);
    const std::string text = compare_report(std::move(runs), focal, opt.out);
    io::write_file(path_in(opt.out, "compare.txt"), text);
    std::cout << text;
    return 0;
  });
}

// ---------------------------------------------------------------------------
// explain

/// Explains the prediction a backtest made for `date`. The final trained
/// network of the run and the scalers of its last window act as the black
/// box; quartile bins come from that window's training samples.
inline int cmd_explain(const std::string& run_dir, pipeline::ModelVariant variant, const std::string& date_text,
                       const explain::ExplainerConfig& ecfg, const Options& opt) {
  return guarded(*opt.log, [&] {
    if (variant == pipeline::ModelVariant::kGarch) throw UsageError("explain: the GARCH variant has no network");
    const Date date = Date::parse(date_text);
    ExperimentConfig cfg(Profile::kPaper);
    cfg.merge_text(io::read_file(path_in(run_dir, "config.txt")));
    const auto run = pipeline::read_predictions_csv(io::read_file(path_in(run_dir, predictions_file(variant))), variant);
    if (date < run.predictions.front().date || run.predictions.back().date < date)
      throw DataError("explain: " + date.iso() + " lies outside the test span " + run.predictions.front().date.iso() +
                      " .. " + run.predictions.back().date.iso());
    const nn::LstmNetwork net =
        nn::load_text(io::read_file(path_in(run_dir, std::string("network_") + pipeline::to_string(variant) + ".txt")));

    const pipeline::MarketData data = load_market_data(cfg, opt);
    const pipeline::PipelineConfig pc = cfg.pipeline();
    std::optional<pipeline::GarchForecasts> g;
    std::vector<pipeline::ModelVariant> runnable;
    for (auto v : cfg.variants())
      if (!(pipeline::needs_vix(v) && !data.vix)) runnable.push_back(v);
    bool any_garch = false;
    for (auto v : runnable) any_garch = any_garch || pipeline::needs_garch(v);
    if (any_garch) g = read_garch_forecasts(path_in(run_dir, "garch_forecasts.csv"));
    const auto table = pipeline::shared_table(runnable, data, pc, g ? &*g : nullptr)
                           .select(pipeline::variant_features(variant, pc.features.return_kind));
    const auto ds = pipeline::make_sequences(table, pc.lookback);
    const auto it = std::find(ds.dates.begin(), ds.dates.end(), date);
    if (it == ds.dates.end()) throw DataError("explain: no prediction dated " + date.iso());
    const auto sample = static_cast<std::size_t>(it - ds.dates.begin());

    const auto blocks = pipeline::plan_windows(ds.size(), pc.wf);
    const std::size_t train_end = blocks.back().first - pc.wf.initial_val;
    const auto [xs, ys] = pipeline::fit_scalers(ds, train_end);
    std::vector<Eigen::MatrixXd> train_windows;
    for (std::size_t i = 0; i < train_end; ++i) train_windows.push_back(ds.sequence(i));
    const auto bins = explain::discretize_stats(train_windows);
    const explain::Predictor model = [&](const Eigen::MatrixXd& w) {
      return ys.inverse_value(0, nn::forward(net, xs.transform(w)));
    };
    const auto e = explain::explain_instance(model, ds.sequence(sample), table.names, bins, ecfg);
    ensure_dir(opt.out);
    const std::string text = explain::report(e);
    io::write_file(path_in(opt.out, std::string("explanation_") + pipeline::to_string(variant) + "_" + date.iso() + ".txt"),
                   text);
    std::cout << text;
    return 0;
  });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  std::string name;
  std::string override_text;
  bool ok = false;
  double mae = 0.0;
  double rmse = 0.0;
  std::string error;
};

inline bool affects_garch(const std::string& key) {
  return key.rfind("garch.", 0) == 0 || key == "data.sp500" || key == "data.start" || key == "data.end";
}

/// Base run plus one run per scenario, each in its own directory, and a
/// summary in which the base is marked (*) and better scenarios are flagged.
inline int cmd_sweep(const ExperimentConfig& cfg, const Options& opt, std::vector<SweepRow>* rows_out = nullptr) {
  return guarded(*opt.log, [&] {
    ensure_dir(opt.out);
    const auto variant = pipeline::parse_variant(cfg.get("run.sweep_variant"));
    const std::vector<pipeline::ModelVariant> only{variant};
    std::vector<SweepRow> rows;
    std::optional<pipeline::GarchForecasts> base_garch;

    auto run = [&](const ExperimentConfig& c, const std::string& name, const std::string& text,
                   const pipeline::GarchForecasts* pre) {
      SweepRow row;
      row.name = name;
      row.override_text = text;
      Options o = opt;
      o.out = path_in(opt.out, name);
      std::map<pipeline::ModelVariant, pipeline::VariantOutcome> outcomes;
      const int code = guarded(*opt.log, [&] { return run_backtest(c, o, only, pre, &outcomes); });
      const auto it = outcomes.find(variant);
      if (code == 0 && it != outcomes.end() && it->second.run) {
        const auto& r = *it->second.run;
        row.ok = true;
        row.mae = eval::mae(r.forecasts(), r.actuals());
        row.rmse = eval::rmse(r.forecasts(), r.actuals());
      } else {
        row.error = it != outcomes.end() && !it->second.error.empty() ? it->second.error : "exit code " + std::to_string(code);
      }
      rows.push_back(row);
      return code;
    };

    ExperimentConfig base = cfg;
    base.clear_sweep();
    const int base_code = run(base, "base", "", nullptr);
    if (pipeline::needs_garch(variant) && fs::exists(path_in(path_in(opt.out, "base"), "garch_forecasts.csv")))
      base_garch = read_garch_forecasts(path_in(path_in(opt.out, "base"), "garch_forecasts.csv"));
    for (const auto& s : cfg.sweep()) {
      const ExperimentConfig sc = cfg.with(s);
      const bool reuse = base_garch && !affects_garch(s.key);
      run(sc, s.name, s.key + " = " + s.value, reuse ? &*base_garch : nullptr);
    }

    std::vector<std::vector<std::string>> table;
    std::string csv = "scenario,override,base,mae,rmse,better_mae,better_rmse,error\n";
    const SweepRow& b = rows.front();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const bool is_base = i == 0;
      const bool bm = !is_base && r.ok && b.ok && r.mae < b.mae;
      const bool br = !is_base && r.ok && b.ok && r.rmse < b.rmse;
      const std::string name = is_base ? "base (*)" : r.name;
      const std::string flag = bm || br ? std::string(bm ? "MAE" : "") + (bm && br ? "," : "") + (br ? "RMSE" : "") : "";
      table.push_back({name, is_base ? "-" : r.override_text, r.ok ? eval::sci(r.mae) : "failed",
                       r.ok ? eval::sci(r.rmse) : "failed", flag});
      csv += r.name + ",\"" + r.override_text + "\"," + (is_base ? "true" : "false") + "," +
             (r.ok ? io::format_double(r.mae) : "") + "," + (r.ok ? io::format_double(r.rmse) : "") + "," +
             (bm ? "true" : "false") + "," + (br ? "true" : "false") + ",\"" + r.error + "\"\n";
    }
    const std::string text = std::string("Sensitivity of ") + label(variant) + " (* = base setup)\n" +
                             eval::format_table({"Scenario", "Override", "MAE", "RMSE", "Better than base"}, table);
    io::write_file(path_in(opt.out, "sweep_summary.txt"), text);
    io::write_file(path_in(opt.out, "sweep_summary.csv"), csv);
    std::cout << text;
    if (rows_out) *rows_out = rows;
    return base_code;
  });
}

}  // namespace volfc::cli
