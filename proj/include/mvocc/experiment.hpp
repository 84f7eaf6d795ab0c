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

/*
 Config-driven experiment runner.

 A job is one (method, class, repeat) triple:
   split -> [-1, 1] normalize -> train -> score -> late-fuse -> metrics
 Jobs share nothing but the immutable dataset. Each repeat's split is seeded
 from (seed, class, repeat) so every method sees the same partitions; the
 model seed further mixes in the method. Results land in per-job slots, so
 output does not depend on --jobs or scheduling order.
*/

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvocc/data.hpp"
#include "mvocc/errors.hpp"
#include "mvocc/eval.hpp"
#include "mvocc/methods.hpp"
#include "mvocc/model_io.hpp"
#include "mvocc/rng.hpp"

namespace mvocc {

inline SynthSpec synth_from_json(const json& j) {
  static const std::set<std::string> known{"name",       "dims",       "latent_dim",
                                           "noise",      "shift",      "n_positive",
                                           "n_negative", "noise_views", "seed"};
  if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown synthetic setting '" + key + "'");
  SynthSpec s;
  try {
    s.name = j.value("name", s.name);
    if (j.contains("dims")) s.dims = j["dims"].get<std::vector<std::size_t>>();
    s.latent_dim = j.value("latent_dim", s.latent_dim);
    s.noise = j.value("noise", s.noise);
    s.shift = j.value("shift", s.shift);
    s.n_positive = j.value("n_positive", s.n_positive);
    s.n_negative = j.value("n_negative", s.n_negative);
    if (j.contains("noise_views")) s.noise_views = j["noise_views"].get<std::vector<std::size_t>>();
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad synthetic setting: ") + e.what());
  }
  s.validate();
  return s;
}

inline json synth_to_json(const SynthSpec& s) {
  return {{"name", s.name},         {"dims", s.dims},
          {"latent_dim", s.latent_dim}, {"noise", s.noise},
          {"shift", s.shift},       {"n_positive", s.n_positive},
          {"n_negative", s.n_negative}, {"noise_views", s.noise_views},
          {"seed", s.seed}};
}

enum class Protocol { OneVsAll, Direct };

struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<std::string> dataset;  // directory or manifest path
  std::optional<SynthSpec> synth;
  std::vector<MethodId> methods;
  json method_config = json::object();                // applied to every method
  std::map<std::string, json> method_overrides;       // per method id
  Protocol protocol = Protocol::OneVsAll;
  std::optional<std::vector<int>> classes;
  std::size_t max_classes = 0;  // 0 = no limit
  bool qualify = false;         // skip classes with < 300 training rows
  double split_ratio = 0.7;
  std::optional<std::size_t> train_count;
  int repeats = 10;
  LateFusion late_fusion = LateFusion::Avg;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int jobs = 1;

  void validate() const {
    if (dataset.has_value() == synth.has_value()) {
      throw ConfigError("exactly one of 'dataset' and 'synth' must be given");
    }
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (!train_count && !(split_ratio > 0.0 && split_ratio < 1.0)) {
      throw ConfigError("split_ratio must be in (0, 1)");
    }
    for (const auto& [id, _] : method_overrides) parse_method(id);
  }

  /// Canonical JSON of everything that affects results (not output_dir/jobs).
  json to_json() const {
    json j;
    j["name"] = name;
    if (dataset) j["dataset"] = *dataset;
    if (synth) j["synth"] = synth_to_json(*synth);
    j["methods"] = json::array();
    for (MethodId m : methods) j["methods"].push_back(std::string(to_string(m)));
    j["method_config"] = method_config;
    j["method_overrides"] = method_overrides;
    j["protocol"] = protocol == Protocol::OneVsAll ? "one_vs_all" : "direct";
    if (classes) j["classes"] = *classes;
    j["max_classes"] = max_classes;
    j["qualify"] = qualify;
    j["split_ratio"] = split_ratio;
    if (train_count) j["train_count"] = *train_count;
    j["repeats"] = repeats;
    j["late_fusion"] = std::string(to_string(late_fusion));
    j["seed"] = seed;
    return j;
  }
};

inline ExperimentConfig experiment_from_json(const json& j) {
  static const std::set<std::string> known{
      "name",        "dataset",     "synth",       "method",     "methods",
      "method_config", "method_overrides", "protocol", "positive_class", "classes",
      "max_classes", "qualify",     "split_ratio", "train_count", "repeats",
      "late_fusion", "seed",        "output_dir",  "jobs"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("dataset")) c.dataset = j["dataset"].get<std::string>();
    if (j.contains("synth")) c.synth = synth_from_json(j["synth"]);
    if (j.contains("method") && j.contains("methods")) {
      throw ConfigError("give either 'method' or 'methods', not both");
    }
    if (j.contains("method")) c.methods.push_back(parse_method(j["method"].get<std::string>()));
    if (j.contains("methods"))
      for (const json& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("method_config")) c.method_config = j["method_config"];
    if (j.contains("method_overrides"))
      for (const auto& [k, v] : j["method_overrides"].items()) c.method_overrides[k] = v;
    if (j.contains("protocol")) {
      const std::string p = j["protocol"].get<std::string>();
      if (p == "one_vs_all") c.protocol = Protocol::OneVsAll;
      else if (p == "direct") c.protocol = Protocol::Direct;
      else throw ConfigError("invalid protocol '" + p + "' (expected one_vs_all or direct)");
    }
    if (j.contains("positive_class")) c.classes = std::vector<int>{j["positive_class"].get<int>()};
    if (j.contains("classes")) c.classes = j["classes"].get<std::vector<int>>();
    c.max_classes = j.value("max_classes", c.max_classes);
    c.qualify = j.value("qualify", c.qualify);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    if (j.contains("train_count")) c.train_count = j["train_count"].get<std::size_t>();
    c.repeats = j.value("repeats", c.repeats);
    if (j.contains("late_fusion")) c.late_fusion = parse_late_fusion(j["late_fusion"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig c = experiment_from_json(j);
  // Relative dataset paths resolve against the config file's directory.
  if (c.dataset && std::filesystem::path(*c.dataset).is_relative()) {
    const auto candidate = path.parent_path() / *c.dataset;
    if (std::filesystem::exists(candidate)) c.dataset = candidate.string();
  }
  return c;
}

/// FNV-1a over the canonical JSON text.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline MultiViewDataset load_experiment_data(const ExperimentConfig& c) {
  if (c.synth) return synth_generate(*c.synth);
  try {
    return load_dataset(*c.dataset);
  } catch (const DataError& e) {
    throw DataError("dataset '" + *c.dataset + "': " + e.what());
  }
}

inline MethodConfig method_config_for(const ExperimentConfig& c, MethodId m,
                                      std::span<const std::size_t> view_dims) {
  MethodConfig mc = default_config(m, view_dims);
  apply_overrides(mc, c.method_config);
  if (auto it = c.method_overrides.find(std::string(to_string(m))); it != c.method_overrides.end()) {
    apply_overrides(mc, it->second);
  }
  mc.validate();
  return mc;
}

/// Positive classes to evaluate, in ascending label order.
inline std::vector<int> experiment_classes(const ExperimentConfig& c, const MultiViewDataset& ds) {
  std::vector<int> all = ds.classes();
  std::vector<int> out;
  if (c.classes) {
    for (int k : *c.classes) {
      if (std::find(all.begin(), all.end(), k) == all.end()) {
        throw DataError("class " + std::to_string(k) + " is absent from dataset '" + ds.name + "'");
      }
      out.push_back(k);
    }
  } else if (c.protocol == Protocol::Direct) {
    out.push_back(all.front());
  } else {
    out = all;
  }
  if (c.qualify) {
    std::vector<int> q;
    for (int k : out)
      if (training_eligible_rows(ds, k, c.split_ratio) >= kMinQualifiedTrainRows) q.push_back(k);
    out = q;
  }
  if (c.max_classes > 0 && out.size() > c.max_classes) out.resize(c.max_classes);
  if (out.empty()) throw DataError("no qualified classes in dataset '" + ds.name + "'");
  return out;
}

// ---------------------------------------------------------------------------

struct RunRecord {
  MethodId method{};
  int cls = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::vector<double> view_auroc;
  std::map<std::string, double> late_fusion_auroc;
  std::vector<std::string> warnings;
  double final_loss = 0.0;
  double wall_clock_s = 0.0;
};

struct MethodSummary {
  MethodId method{};
  MetricsReport report;  // one value per repeat (averaged over classes)
  std::optional<double> p_value;
  bool best = false;
};

struct ExperimentResult {
  std::string dataset;
  std::string hash;
  std::vector<int> classes;
  std::vector<RunRecord> runs;
  std::vector<MethodSummary> summary;
};

inline std::uint64_t split_seed(std::uint64_t base, int cls, int repeat) {
  return derive_seed(derive_seed(base, static_cast<std::uint64_t>(static_cast<std::int64_t>(cls))),
                     static_cast<std::uint64_t>(repeat));
}

inline std::uint64_t method_index(MethodId m) {
  return static_cast<std::uint64_t>(m);
}

/// Runs fn(i) for i in [0, n) over `jobs` threads; rethrows the first error.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (err) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

struct PreparedSplit {
  std::vector<Tensor> train, test;
  std::vector<int> labels;
  NormStats norm;
};

inline PreparedSplit prepare_split(const ExperimentConfig& c, const MultiViewDataset& ds, int cls,
                                   int repeat) {
  Rng rng(split_seed(c.seed, cls, repeat));
  OccSplit s = one_vs_all_split(ds, cls, c.split_ratio, rng, c.train_count);
  PreparedSplit p;
  p.norm = normalize_fit(s.train);
  p.train = normalize_apply(p.norm, s.train);
  p.test = normalize_apply(p.norm, s.test);
  p.labels = std::move(s.test_labels);
  return p;
}

inline RunRecord run_job(const ExperimentConfig& c, const MultiViewDataset& ds, MethodId m,
                         int cls, int repeat) {
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedSplit sp = prepare_split(c, ds, cls, repeat);
  MethodConfig mc = method_config_for(c, m, ds.view_dims());
  RunRecord r;
  r.method = m;
  r.cls = cls;
  r.repeat = repeat;
  r.seed = derive_seed(split_seed(c.seed, cls, repeat), method_index(m));
  mc.seed = r.seed;
  Model model = train(mc, sp.train);
  const Tensor s = score(model, sp.test);
  for (double v : s.data()) {
    if (!std::isfinite(v)) throw DivergenceError(std::string(to_string(m)) + ": non-finite score", mc.epochs);
  }
  r.metrics = compute_metrics(late_fuse(c.late_fusion, s), sp.labels);
  for (LateFusion lf : {LateFusion::Avg, LateFusion::Min, LateFusion::Max})
    r.late_fusion_auroc[std::string(to_string(lf))] = auroc(late_fuse(lf, s), sp.labels);
  for (std::size_t v = 0; v < s.cols(); ++v) {
    std::vector<double> col(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) col[i] = s(i, v);
    r.view_auroc.push_back(auroc(col, sp.labels));
  }
  r.warnings = model.stats.warnings;
  r.final_loss = model.stats.epoch_losses.back();
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Fills summary[*].p_value (Welch vs the best mean AUROC) and marks the best.
inline void annotate_significance(std::vector<MethodSummary>& summary) {
  if (summary.empty()) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < summary.size(); ++i)
    if (summary[i].report.auroc.mean() > summary[best].report.auroc.mean()) best = i;
  for (std::size_t i = 0; i < summary.size(); ++i) {
    summary[i].best = i == best;
    if (i == best) {
      summary[i].p_value = 1.0;
    } else if (summary[i].report.auroc.values.size() >= 2 &&
               summary[best].report.auroc.values.size() >= 2) {
      summary[i].p_value = welch_t_test(summary[i].report.auroc.values, summary[best].report.auroc.values);
    }
  }
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  if (c.methods.empty()) throw ConfigError("no method given");
  const MultiViewDataset ds = load_experiment_data(c);
  ds.validate();
  // Surface config errors before any training starts.
  for (MethodId m : c.methods) method_config_for(c, m, ds.view_dims());

  ExperimentResult res;
  res.dataset = ds.name;
  res.hash = config_hash(c);
  res.classes = experiment_classes(c, ds);
  struct Key { MethodId m; int cls; int repeat; };
  std::vector<Key> keys;
  for (MethodId m : c.methods)
    for (int cls : res.classes)
      for (int r = 0; r < c.repeats; ++r) keys.push_back({m, cls, r});
  res.runs.resize(keys.size());
  parallel_for(keys.size(), c.jobs, [&](std::size_t i) {
    res.runs[i] = run_job(c, ds, keys[i].m, keys[i].cls, keys[i].repeat);
  });

  for (MethodId m : c.methods) {
    MethodSummary s;
    s.method = m;
    for (int r = 0; r < c.repeats; ++r) {
      Metrics acc;
      double n = 0.0;
      for (const RunRecord& run : res.runs) {
        if (run.method != m || run.repeat != r) continue;
        acc.auroc += run.metrics.auroc;
        acc.aupr += run.metrics.aupr;
        acc.tnr95 += run.metrics.tnr95;
        n += 1.0;
      }
      s.report.add({acc.auroc / n, acc.aupr / n, acc.tnr95 / n});
    }
    res.summary.push_back(std::move(s));
  }
  annotate_significance(res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// Report files

inline constexpr const char* kPolarityNote =
    "scores are anomaly scores (higher = more anomalous); the negative class is the detection "
    "target for AUROC/AUPR; TNR@95%TPR accepts 95% of the positive class";

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json series_json(const MetricSeries& s) {
  return {{"mean", s.mean()}, {"std", s.std()}, {"values", s.values}};
}

inline json result_to_json(const ExperimentConfig& c, const ExperimentResult& r) {
  json j;
  j["tool"] = "mvocc";
  j["polarity"] = kPolarityNote;
  j["config_hash"] = r.hash;
  j["config"] = c.to_json();
  j["dataset"] = r.dataset;
  j["classes"] = r.classes;
  j["runs"] = json::array();
  for (const RunRecord& run : r.runs) {
    j["runs"].push_back({{"method", std::string(to_string(run.method))},
                         {"class", run.cls},
                         {"repeat", run.repeat},
                         {"seed", run.seed},
                         {"config_hash", r.hash},
                         {"auroc", run.metrics.auroc},
                         {"aupr", run.metrics.aupr},
                         {"tnr95", run.metrics.tnr95},
                         {"view_auroc", run.view_auroc},
                         {"late_fusion_auroc", run.late_fusion_auroc},
                         {"final_loss", run.final_loss},
                         {"warnings", run.warnings},
                         {"wall_clock_s", run.wall_clock_s}});
  }
  j["summary"] = json::array();
  for (const MethodSummary& s : r.summary) {
    json e{{"method", std::string(to_string(s.method))},
           {"auroc", series_json(s.report.auroc)},
           {"aupr", series_json(s.report.aupr)},
           {"tnr95", series_json(s.report.tnr95)},
           {"best", s.best}};
    e["p_value"] = s.p_value ? json(*s.p_value) : json(nullptr);
    j["summary"].push_back(e);
  }
  return j;
}

/// Table-shaped summary: one row per method, mean±std cells, p-values vs the
/// best performer (marked with '*').
inline std::string summary_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "method,dataset,auroc,auroc_mean,auroc_std,p_value,best,aupr_mean,aupr_std,tnr95_mean,tnr95_std\n";
  for (const MethodSummary& s : r.summary) {
    char cell[64];
    std::snprintf(cell, sizeof cell, "%.4f±%.4f%s", s.report.auroc.mean(), s.report.auroc.std(),
                  s.best ? "*" : "");
    os << to_string(s.method) << ',' << r.dataset << ',' << cell << ','
       << fmt(s.report.auroc.mean()) << ',' << fmt(s.report.auroc.std()) << ','
       << (s.p_value ? fmt(*s.p_value) : std::string()) << ',' << (s.best ? 1 : 0) << ','
       << fmt(s.report.aupr.mean()) << ',' << fmt(s.report.aupr.std()) << ','
       << fmt(s.report.tnr95.mean()) << ',' << fmt(s.report.tnr95.std()) << '\n';
  }
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot write " + p.string());
  os << text;
}

inline void write_reports(const ExperimentConfig& c, const ExperimentResult& r,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", result_to_json(c, r).dump(2) + "\n");
  write_text(dir / "summary.csv", summary_csv(r));
}

/// `bench` defaults: all eleven methods and the qualified-class filter.
inline ExperimentConfig bench_defaults(ExperimentConfig c) {
  if (c.methods.empty()) c.methods.assign(kAllMethods.begin(), kAllMethods.end());
  if (!c.classes) c.qualify = true;
  return c;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParam { Rank, Margin, Alpha };

inline SweepParam parse_sweep_param(const std::string& s) {
  if (s == "R" || s == "rank") return SweepParam::Rank;
  if (s == "m" || s == "margin") return SweepParam::Margin;
  if (s == "alpha") return SweepParam::Alpha;
  throw ConfigError("invalid sweep parameter '" + s + "' (expected R, m or alpha)");
}

inline std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Rank: return "R";
    case SweepParam::Margin: return "m";
    case SweepParam::Alpha: return "alpha";
  }
  return "?";
}

inline bool sweep_applies(SweepParam p, MethodId m) {
  switch (p) {
    case SweepParam::Rank: return m == MethodId::TF;
    case SweepParam::Margin: return m == MethodId::Sim;
    case SweepParam::Alpha: return is_alignment(m);
  }
  return false;
}

struct SweepPoint {
  double value = 0.0;
  ExperimentResult result;
};

inline ExperimentConfig with_sweep_value(ExperimentConfig c, SweepParam p, double value) {
  json& o = c.method_config;
  switch (p) {
    case SweepParam::Rank:
      if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("R must be a positive integer");
      o["fusion"]["rank"] = static_cast<std::size_t>(value);
      break;
    case SweepParam::Margin: o["align"]["margin"] = value; break;
    case SweepParam::Alpha: o["align"]["alpha"] = value; break;
  }
  return c;
}

inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& c, SweepParam p,
                                         const std::vector<double>& grid) {
  if (c.methods.empty()) throw ConfigError("no method given");
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  for (MethodId m : c.methods) {
    if (!sweep_applies(p, m)) {
      throw ConfigError("sweep parameter " + to_string(p) + " does not apply to " +
                        std::string(to_string(m)));
    }
  }
  std::vector<SweepPoint> out;
  for (double v : grid) out.push_back({v, run_experiment(with_sweep_value(c, p, v))});
  return out;
}

inline json sweep_to_json(const ExperimentConfig& c, SweepParam p, const std::vector<SweepPoint>& pts) {
  json j;
  j["tool"] = "mvocc";
  j["polarity"] = kPolarityNote;
  j["config_hash"] = config_hash(c);
  j["config"] = c.to_json();
  j["param"] = to_string(p);
  j["points"] = json::array();
  for (const SweepPoint& pt : pts) {
    for (const MethodSummary& s : pt.result.summary) {
      j["points"].push_back({{"value", pt.value},
                             {"method", std::string(to_string(s.method))},
                             {"auroc", series_json(s.report.auroc)},
                             {"aupr", series_json(s.report.aupr)},
                             {"tnr95", series_json(s.report.tnr95)}});
    }
  }
  return j;
}

inline std::string sweep_csv(SweepParam p, const std::vector<SweepPoint>& pts) {
  std::ostringstream os;
  os << "param,value,method,auroc_mean,auroc_std,aupr_mean,aupr_std,tnr95_mean,tnr95_std\n";
  for (const SweepPoint& pt : pts) {
    for (const MethodSummary& s : pt.result.summary) {
      os << to_string(p) << ',' << fmt(pt.value) << ',' << to_string(s.method) << ','
         << fmt(s.report.auroc.mean()) << ',' << fmt(s.report.auroc.std()) << ','
         << fmt(s.report.aupr.mean()) << ',' << fmt(s.report.aupr.std()) << ','
         << fmt(s.report.tnr95.mean()) << ',' << fmt(s.report.tnr95.std()) << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Best single view (a hindsight reference: it picks the view using test labels)

struct SingleViewResult {
  std::vector<std::string> view_names;
  std::vector<MetricSeries> view_auroc;  // per view, one value per repeat
  std::size_t best_view = 0;
  double best_auroc = 0.0;
};

inline SingleViewResult run_best_single_view(const ExperimentConfig& c) {
  c.validate();
  const MultiViewDataset ds = load_experiment_data(c);
  ds.validate();
  const std::vector<int> classes = experiment_classes(c, ds);
  const std::size_t V = ds.num_views();
  SingleViewResult res;
  for (std::size_t v = 0; v < V; ++v) res.view_names.push_back(ds.view_names.size() > v ? ds.view_names[v] : std::to_string(v));
  res.view_auroc.resize(V);

  struct Key { std::size_t view; int cls; int repeat; };
  std::vector<Key> keys;
  for (std::size_t v = 0; v < V; ++v)
    for (int cls : classes)
      for (int r = 0; r < c.repeats; ++r) keys.push_back({v, cls, r});
  std::vector<double> aurocs(keys.size());
  parallel_for(keys.size(), c.jobs, [&](std::size_t i) {
    const Key& k = keys[i];
    const PreparedSplit sp = prepare_split(c, ds, k.cls, k.repeat);
    const std::size_t d = ds.views[k.view].cols();
    MethodConfig mc = method_config_for(c, MethodId::Dae, std::vector<std::size_t>{d, d});
    mc.encoders.resize(1);
    mc.decoders.resize(1);
    // Same stream for every view, so duplicated views train identical models.
    mc.seed = derive_seed(split_seed(c.seed, k.cls, k.repeat), method_index(MethodId::Dae));
    const Model model = train(mc, std::span<const Tensor>(&sp.train[k.view], 1));
    const Tensor s = score(model, std::span<const Tensor>(&sp.test[k.view], 1));
    aurocs[i] = auroc(s.data(), sp.labels);
  });
  for (std::size_t v = 0; v < V; ++v) {
    for (int r = 0; r < c.repeats; ++r) {
      double acc = 0.0;
      for (std::size_t i = 0; i < keys.size(); ++i)
        if (keys[i].view == v && keys[i].repeat == r) acc += aurocs[i];
      res.view_auroc[v].values.push_back(acc / static_cast<double>(classes.size()));
    }
    if (v == 0 || res.view_auroc[v].mean() > res.best_auroc) {
      res.best_view = v;
      res.best_auroc = res.view_auroc[v].mean();
    }
  }
  return res;
}

inline json single_view_to_json(const ExperimentConfig& c, const SingleViewResult& r) {
  json j;
  j["tool"] = "mvocc";
  j["polarity"] = kPolarityNote;
  j["config_hash"] = config_hash(c);
  j["config"] = c.to_json();
  j["hindsight_reference"] = true;
  j["note"] = "hindsight reference: the best view is chosen using test-set AUROC";
  j["views"] = json::array();
  for (std::size_t v = 0; v < r.view_names.size(); ++v)
    j["views"].push_back({{"view", r.view_names[v]}, {"auroc", series_json(r.view_auroc[v])}});
  j["best_view"] = r.view_names[r.best_view];
  j["best_auroc"] = r.best_auroc;
  return j;
}

}  // namespace mvocc
