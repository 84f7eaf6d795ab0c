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

// Late fusion, threshold-free detection metrics and significance testing.
//
// Polarity: scores are anomaly scores (higher = more anomalous) and the
// negative class (label -1) is the detection target throughout.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "mvocc/errors.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

enum class LateFusion { Avg, Min, Max };

inline std::string_view to_string(LateFusion f) {
  switch (f) {
    case LateFusion::Avg: return "AVG";
    case LateFusion::Min: return "MIN";
    case LateFusion::Max: return "MAX";
  }
  return "?";
}

inline LateFusion parse_late_fusion(std::string_view s) {
  if (s == "AVG") return LateFusion::Avg;
  if (s == "MIN") return LateFusion::Min;
  if (s == "MAX") return LateFusion::Max;
  throw ConfigError("invalid late fusion '" + std::string(s) + "' (expected AVG, MIN or MAX)");
}

/// Row-wise mean / min / max of an [N x V] score matrix.
inline std::vector<double> late_fuse(LateFusion how, const Tensor& s) {
  if (s.rank() != 2 || s.empty()) throw ShapeError("late_fuse: empty score matrix");
  const std::size_t n = s.rows(), v = s.cols();
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = s(r, 0);
    for (std::size_t c = 1; c < v; ++c) {
      const double x = s(r, c);
      switch (how) {
        case LateFusion::Avg: acc += x; break;
        case LateFusion::Min: acc = std::min(acc, x); break;
        case LateFusion::Max: acc = std::max(acc, x); break;
      }
    }
    out[r] = how == LateFusion::Avg ? acc / static_cast<double>(v) : acc;
  }
  return out;
}

namespace detail {

inline void check_metric_input(std::span<const double> scores, std::span<const int> labels,
                               const char* what) {
  if (scores.size() != labels.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(labels.size()) + " labels");
  }
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw DataError(std::string(what) + ": labels must be +1 or -1");
  }
  if (!pos || !neg) {
    throw UndefinedMetricError(std::string(what) + " is undefined with a single class present");
  }
}

/// Indices sorted by descending score.
inline std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

/// P(score of a random negative > score of a random positive), ties ½.
/// One pass over score-sorted tie groups.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_metric_input(scores, labels, "AUROC");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Pair counts are integers (in halves), so the sum is exact.
  double n_pos_below = 0.0, wins2 = 0.0;  // wins2 = 2 x (wins + ties/2)
  double n_pos = 0.0, n_neg = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double gp = 0.0, gn = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? gp : gn) += 1.0;
      ++j;
    }
    wins2 += gn * (2.0 * n_pos_below + gp);
    n_pos_below += gp;
    n_pos += gp;
    n_neg += gn;
    i = j;
  }
  return wins2 / (2.0 * n_pos * n_neg);
}

/// Average precision with the negative class as the retrieval target; each
/// group of tied scores is one threshold.
inline double aupr(std::span<const double> scores, std::span<const int> labels) {
  detail::check_metric_input(scores, labels, "AUPR");
  const std::vector<std::size_t> idx = detail::descending(scores);
  double total = 0.0;
  for (int y : labels) total += y == -1 ? 1.0 : 0.0;
  double tp = 0.0, taken = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double hits = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == -1) hits += 1.0;
      ++j;
    }
    tp += hits;
    taken += static_cast<double>(j - i);
    ap += hits * (tp / taken);
    i = j;
  }
  return ap / total;
}

/// Positive-class data are accepted when score <= threshold. The threshold is
/// the smallest score value admitting at least `tpr_target` of them; returns
/// the fraction of negatives scored strictly above it.
inline double tnr_at_tpr(std::span<const double> scores, std::span<const int> labels,
                         double tpr_target = 0.95) {
  detail::check_metric_input(scores, labels, "TNR@TPR");
  std::vector<double> pos;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (labels[i] == 1) pos.push_back(scores[i]);
  std::sort(pos.begin(), pos.end());
  // Smallest k with k / n >= target; compare in integers to dodge rounding.
  const double n = static_cast<double>(pos.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(tpr_target * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, pos.size());
  const double thr = pos[k - 1];
  double above = 0.0, negs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != -1) continue;
    negs += 1.0;
    if (scores[i] > thr) above += 1.0;
  }
  return above / negs;
}

// ---------------------------------------------------------------------------

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

inline Summary summarize(std::span<const double> x) {
  Summary s;
  if (x.empty()) return s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(x.size() - 1));
  }
  return s;
}

/// Two-sided Welch t-test p-value.
inline double welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ConfigError("welch_t_test needs at least 2 values per sample");
  }
  const Summary sa = summarize(a), sb = summarize(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sa.std * sa.std / na, vb = sb.std * sb.std / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) return sa.mean == sb.mean ? 1.0 : 0.0;
  const double t = (sa.mean - sb.mean) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  // P(|T| > t) = I_{df/(df+t²)}(df/2, 1/2)
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

struct Metrics {
  double auroc = 0.0;
  double aupr = 0.0;
  double tnr95 = 0.0;
};

inline Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  return {auroc(scores, labels), aupr(scores, labels), tnr_at_tpr(scores, labels, 0.95)};
}

/// Per-repeat values of one metric plus their summary.
struct MetricSeries {
  std::vector<double> values;
  double mean() const { return summarize(values).mean; }
  double std() const { return summarize(values).std; }
};

struct MetricsReport {
  MetricSeries auroc, aupr, tnr95;

  void add(const Metrics& m) {
    auroc.values.push_back(m.auroc);
    aupr.values.push_back(m.aupr);
    tnr95.values.push_back(m.tnr95);
  }
};

}  // namespace mvocc
