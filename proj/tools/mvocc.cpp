// Copyright 2026 The mvocc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// mvocc — multi-view one-class experiment runner.
//
//   mvocc run   -c cfg.json [--jobs N] [--out DIR]
//   mvocc bench -c cfg.json [--jobs N] [--out DIR]
//   mvocc sweep -c cfg.json --param R --grid 4,8,16,32,64
//   mvocc synth -c synth.json -o data/
//   mvocc best-single-view -c cfg.json
//
// Exit codes: 0 ok, 2 config error, 3 data error, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvocc/experiment.hpp"

namespace fs = std::filesystem;
using namespace mvocc;

namespace {

struct Common {
  std::string config;
  std::string out;
  int jobs = 0;
  std::vector<std::string> methods;
  int repeats = 0;
  long long seed = -1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "experiment config (JSON)")->required();
  app->add_option("--out", c.out, "output directory (overrides output_dir)");
  app->add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("-m,--methods", c.methods, "method ids (overrides the config)")->delimiter(',');
  app->add_option("--repeats", c.repeats, "repeats (overrides the config)")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "base seed (overrides the config)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = load_experiment(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.jobs > 0) cfg.jobs = c.jobs;
  if (!c.methods.empty()) {
    cfg.methods.clear();
    for (const std::string& m : c.methods) cfg.methods.push_back(parse_method(m));
  }
  if (c.repeats > 0) cfg.repeats = c.repeats;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  cfg.validate();
  return cfg;
}

void print_summary(const ExperimentResult& r) {
  std::printf("%-6s %-20s %-8s %-8s %-8s %s\n", "method", "auroc", "aupr", "tnr95", "p", "");
  for (const MethodSummary& s : r.summary) {
    char auc[40];
    std::snprintf(auc, sizeof auc, "%.4f±%.4f", s.report.auroc.mean(), s.report.auroc.std());
    std::printf("%-6s %-20s %-8.4f %-8.4f %-8s %s\n", std::string(to_string(s.method)).c_str(), auc,
                s.report.aupr.mean(), s.report.tnr95.mean(),
                s.p_value ? fmt(*s.p_value).substr(0, 8).c_str() : "-", s.best ? "best" : "");
  }
}

int do_run(const ExperimentConfig& cfg) {
  const ExperimentResult r = run_experiment(cfg);
  write_reports(cfg, r, cfg.output_dir);
  print_summary(r);
  std::printf("wrote %s/report.json and %s/summary.csv\n", cfg.output_dir.c_str(), cfg.output_dir.c_str());
  return 0;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("invalid grid value '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvocc: deep multi-view one-class classification experiments"};
  app.require_subcommand(1);

  Common run_opts, bench_opts, sweep_opts, bsv_opts;
  CLI::App* run = app.add_subcommand("run", "train and evaluate the configured methods");
  add_common(run, run_opts);
  CLI::App* bench = app.add_subcommand("bench", "evaluate all methods on every qualified class");
  add_common(bench, bench_opts);

  CLI::App* sweep = app.add_subcommand("sweep", "sweep one hyperparameter (R, m or alpha)");
  add_common(sweep, sweep_opts);
  std::string param, grid;
  sweep->add_option("--param", param, "R (TF rank), m (SIM margin) or alpha")->required();
  sweep->add_option("--grid", grid, "comma-separated values")->required();

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic multi-view dataset");
  std::string synth_cfg, synth_out, synth_format = "csv";
  synth->add_option("-c,--config", synth_cfg, "synthetic spec (JSON)")->required();
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--format", synth_format, "view file format")->check(CLI::IsMember({"csv", "bin"}));

  CLI::App* bsv = app.add_subcommand("best-single-view", "single-view DAE hindsight reference");
  add_common(bsv, bsv_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return do_run(resolve(run_opts));
    if (*bench) return do_run(bench_defaults(resolve(bench_opts)));
    if (*sweep) {
      const ExperimentConfig cfg = resolve(sweep_opts);
      const SweepParam p = parse_sweep_param(param);
      const auto pts = run_sweep(cfg, p, parse_grid(grid));
      fs::create_directories(cfg.output_dir);
      write_text(fs::path(cfg.output_dir) / "sweep.json", sweep_to_json(cfg, p, pts).dump(2) + "\n");
      const std::string csv = sweep_csv(p, pts);
      write_text(fs::path(cfg.output_dir) / "sweep.csv", csv);
      std::fputs(csv.c_str(), stdout);
      return 0;
    }
    if (*synth) {
      std::ifstream in(synth_cfg);
      if (!in) throw ConfigError("cannot open " + synth_cfg);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(synth_cfg + ": " + e.what());
      }
      const MultiViewDataset ds = synth_generate(synth_from_json(j));
      save_dataset(ds, synth_out, synth_format);
      std::printf("wrote %zu rows x %zu views to %s\n", ds.num_rows(), ds.num_views(), synth_out.c_str());
      return 0;
    }
    if (*bsv) {
      const ExperimentConfig cfg = resolve(bsv_opts);
      const SingleViewResult r = run_best_single_view(cfg);
      fs::create_directories(cfg.output_dir);
      write_text(fs::path(cfg.output_dir) / "best_single_view.json",
                 single_view_to_json(cfg, r).dump(2) + "\n");
      for (std::size_t v = 0; v < r.view_names.size(); ++v)
        std::printf("%-12s auroc %.4f±%.4f\n", r.view_names[v].c_str(), r.view_auroc[v].mean(),
                    r.view_auroc[v].std());
      std::printf("best single view (hindsight reference): %s %.4f\n",
                  r.view_names[r.best_view].c_str(), r.best_auroc);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
