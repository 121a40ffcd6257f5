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

// volfc: command-line front end.
//
//   volfc ingest    --sp500 FILE [--vix FILE] --out DIR
//   volfc fit-garch --config FILE --out DIR
//   volfc backtest  --config FILE --out DIR
//   volfc evaluate  --run DIR --out DIR
//   volfc compare   --run DIR --out DIR [--focal VARIANT]
//   volfc explain   --run DIR --variant V --date YYYY-MM-DD --out DIR
//   volfc sweep     --config FILE --out DIR [--paper-sweep]

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "volfc/commands.hpp"

namespace {

struct Common {
  std::string config;
  std::string profile = "paper";
  std::optional<long long> seed;
  std::optional<long long> garch_refit_stride;
  std::string out = "out";
  bool strict = false;
  unsigned threads = 1;
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* cfg = sub->add_option("--config", c.config, "experiment config file");
  if (needs_config) cfg->check(CLI::ExistingFile);
  sub->add_option("--profile", c.profile, "default profile")->check(CLI::IsMember({"paper", "desk"}));
  sub->add_option("--seed", c.seed, "master seed (overrides run.seed)");
  sub->add_option("--garch-refit-stride", c.garch_refit_stride, "rows between GARCH refits (overrides garch.refit_stride)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_flag("--strict", c.strict, "fail on malformed input rows");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1u, 256u));
}

volfc::ExperimentConfig load_config(const Common& c) {
  volfc::ExperimentConfig cfg(volfc::parse_profile(c.profile));
  if (!c.config.empty()) cfg.merge_text(volfc::io::read_file(c.config));
  if (c.seed) cfg.set("run.seed", std::to_string(*c.seed));
  if (c.garch_refit_stride) cfg.set("garch.refit_stride", std::to_string(*c.garch_refit_stride));
  cfg.validate();
  return cfg;
}

volfc::cli::Options options(const Common& c) {
  volfc::cli::Options o;
  o.out = c.out;
  o.strict = c.strict;
  o.threads = c.threads;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volatility forecasting with GARCH, LSTM and hybrid models"};
  app.set_version_flag("--version", volfc::cli::kVersion);
  app.require_subcommand(1);

  Common common;

  auto* ingest = app.add_subcommand("ingest", "validate price CSVs and join S&P with VIX");
  std::string sp500, vix;
  volfc::ColumnMap sp_cols, vix_cols;
  ingest->add_option("--sp500", sp500, "S&P 500 close CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--vix", vix, "VIX close CSV")->check(CLI::ExistingFile);
  ingest->add_option("--date-col", sp_cols.date, "date column of the S&P file");
  ingest->add_option("--close-col", sp_cols.close, "close column of the S&P file");
  ingest->add_option("--vix-date-col", vix_cols.date, "date column of the VIX file");
  ingest->add_option("--vix-close-col", vix_cols.close, "close column of the VIX file");
  ingest->add_option("--out", common.out, "output directory");
  ingest->add_flag("--strict", common.strict, "fail on malformed input rows");

  auto* fit = app.add_subcommand("fit-garch", "select and fit a GARCH(p,q) model by AIC");
  add_common(fit, common, true);

  auto* backtest = app.add_subcommand("backtest", "walk-forward backtest of the configured variants");
  add_common(backtest, common, true);

  std::string run_dir;
  auto* evaluate = app.add_subcommand("evaluate", "error metrics of a backtest");
  evaluate->add_option("--run", run_dir, "backtest output directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", common.out, "output directory");

  std::string focal;
  auto* compare = app.add_subcommand("compare", "comparison tables across variants");
  compare->add_option("--run", run_dir, "backtest output directory")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--focal", focal, "model compared against the others (default: richest variant present)");
  compare->add_option("--out", common.out, "output directory");

  std::string variant = "LSTM_GARCH_VIX", date;
  volfc::explain::ExplainerConfig ecfg;
  auto* explain = app.add_subcommand("explain", "local surrogate explanation of one prediction");
  explain->add_option("--run", run_dir, "backtest output directory")->required()->check(CLI::ExistingDirectory);
  explain->add_option("--variant", variant, "network variant");
  explain->add_option("--date", date, "prediction date (YYYY-MM-DD)")->required();
  explain->add_option("--samples", ecfg.num_samples, "perturbation samples")->check(CLI::PositiveNumber);
  explain->add_option("--top", ecfg.num_features, "features kept in the surrogate")->check(CLI::PositiveNumber);
  explain->add_option("--kernel-width", ecfg.kernel_width, "kernel width (default 0.75*sqrt(cells))");
  explain->add_option("--seed", ecfg.seed, "sampling seed");
  explain->add_option("--out", common.out, "output directory");
  explain->add_flag("--strict", common.strict, "fail on malformed input rows");

  bool paper_sweep = false;
  auto* sweep = app.add_subcommand("sweep", "base run plus single-override scenarios");
  add_common(sweep, common, false);
  sweep->add_flag("--paper-sweep", paper_sweep, "append the seven sensitivity scenarios of the study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::cerr.setf(std::ios::unitbuf);
  return volfc::cli::guarded(std::cerr, [&]() -> int {
    if (*ingest) return volfc::cli::cmd_ingest(sp500, vix, options(common), sp_cols, vix_cols);
    if (*evaluate) return volfc::cli::cmd_evaluate(run_dir, options(common));
    if (*compare) {
      std::optional<volfc::pipeline::ModelVariant> f;
      if (!focal.empty()) f = volfc::pipeline::parse_variant(focal);
      return volfc::cli::cmd_compare(run_dir, f, options(common));
    }
    if (*explain)
      return volfc::cli::cmd_explain(run_dir, volfc::pipeline::parse_variant(variant), date, ecfg, options(common));

    volfc::ExperimentConfig cfg = load_config(common);
    if (*fit) return volfc::cli::cmd_fit_garch(cfg, options(common));
    if (*backtest) return volfc::cli::cmd_backtest(cfg, options(common));
    if (*sweep) {
      if (paper_sweep) {
        std::string text = cfg.to_text();
        if (cfg.sweep().empty()) text += "\n" + volfc::sweep_block(volfc::paper_sweep());
        volfc::ExperimentConfig merged(cfg.profile());
        merged.merge_text(text);
        cfg = merged;
      }
      if (cfg.sweep().empty()) std::cerr << "note: no [sweep] entries, running the base case only\n";
      return volfc::cli::cmd_sweep(cfg, options(common));
    }
    return 1;
  });
}
