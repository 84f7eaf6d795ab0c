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

// Independent oracles. Deliberately naive: O(n²) pair counting, full
// threshold enumeration, materialized fusion tensors and a dense-solver CCA.

#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mvocc/fusion.hpp"
#include "mvocc/rng.hpp"
#include "test_util.hpp"

namespace mvocc::oracle {

/// `n` scores with both labels present; `ties` draws from 6 levels only.
inline std::pair<std::vector<double>, std::vector<int>> random_scores(std::size_t n, Rng& rng,
                                                                      bool ties) {
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.uniform() < 0.4 ? -1 : 1;
    const double shift = y[i] == -1 ? 0.3 : 0.0;
    s[i] = ties ? static_cast<double>(rng.below(6)) + (y[i] == -1 ? rng.below(2) : 0)
                : rng.uniform() + shift;
  }
  y[0] = -1;
  y[1] = 1;
  return {s, y};
}

inline double auroc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != -1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 1) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Σ over distinct thresholds t (descending) of Δrecall(t) · precision(t),
/// retrieving {score >= t}.
inline double aupr_thresholds(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> th(s);
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double negatives = 0.0;
  for (int v : y) negatives += v == -1;
  double prev_recall = 0.0, ap = 0.0;
  for (double t : th) {
    double tp = 0.0, retrieved = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        retrieved += 1.0;
        tp += y[i] == -1;
      }
    }
    const double recall = tp / negatives;
    ap += (recall - prev_recall) * (tp / retrieved);
    prev_recall = recall;
  }
  return ap;
}

/// Tries every distinct score as the threshold, ascending; the first whose
/// accepted positive fraction (score <= t) reaches `target` wins.
inline double tnr_sweep(const std::vector<double>& s, const std::vector<int>& y, double target) {
  std::vector<double> th(s);
  std::sort(th.begin(), th.end());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  std::size_t pos = 0, neg = 0;
  for (int v : y) (v == 1 ? pos : neg)++;
  for (double t : th) {
    std::size_t accepted = 0, rejected_neg = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (y[i] == 1 && s[i] <= t) ++accepted;
      if (y[i] == -1 && s[i] > t) ++rejected_neg;
    }
    if (static_cast<double>(accepted) >= target * static_cast<double>(pos) - 1e-9) {
      return static_cast<double>(rejected_neg) / static_cast<double>(neg);
    }
  }
  return 0.0;
}

/*
 Explicit tensor fusion: materialize W_k = Σ_r ⊗_v w_{r,k}^{(v)} with
 Π d_v entries, materialize 𝒵 = ⊗_v h^(v) for each row, and contract.
*/
inline Tensor explicit_tensor_fusion(const FusionParams& p, const std::vector<Tensor>& h,
                                    std::size_t rank, std::size_t out_dim) {
  const std::size_t V = h.size(), n = h.front().rows();
  std::vector<std::size_t> dims;
  std::size_t K = 1;
  for (const Tensor& t : h) {
    dims.push_back(t.cols());
    K *= t.cols();
  }
  auto unravel = [&](std::size_t flat) {
    std::vector<std::size_t> idx(V);
    for (std::size_t v = V; v-- > 0;) {
      idx[v] = flat % dims[v];
      flat /= dims[v];
    }
    return idx;
  };
  std::vector<std::vector<double>> W(out_dim, std::vector<double>(K, 0.0));
  for (std::size_t k = 0; k < out_dim; ++k)
    for (std::size_t flat = 0; flat < K; ++flat) {
      const auto idx = unravel(flat);
      for (std::size_t r = 0; r < rank; ++r) {
        double prod = 1.0;
        for (std::size_t v = 0; v < V; ++v) prod *= p.factors[v](r * out_dim + k, idx[v]);
        W[k][flat] += prod;
      }
    }
  Tensor out({n, out_dim});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> Z(K);
    for (std::size_t flat = 0; flat < K; ++flat) {
      const auto idx = unravel(flat);
      double prod = 1.0;
      for (std::size_t v = 0; v < V; ++v) prod *= h[v](i, idx[v]);
      Z[flat] = prod;
    }
    for (std::size_t k = 0; k < out_dim; ++k) {
      double s = p.bias[k];
      for (std::size_t flat = 0; flat < K; ++flat) s += W[k][flat] * Z[flat];
      out(i, k) = s;
    }
  }
  return out;
}

/// Regularized CCA via the generalized eigenproblem
///   Σ_ij Σ_jj⁻¹ Σ_ji a = ρ² Σ_ii a,
/// summing the canonical correlations ρ.
inline double closed_form_cca(const Tensor& x, const Tensor& y, double r) {
  Eigen::MatrixXd X = testing::to_eigen(x), Y = testing::to_eigen(y);
  X.rowwise() -= X.colwise().mean();
  Y.rowwise() -= Y.colwise().mean();
  const double inv = 1.0 / static_cast<double>(X.rows() - 1);
  Eigen::MatrixXd sxx = inv * X.transpose() * X;
  Eigen::MatrixXd syy = inv * Y.transpose() * Y;
  const Eigen::MatrixXd sxy = inv * X.transpose() * Y;
  sxx.diagonal().array() += r;
  syy.diagonal().array() += r;
  const Eigen::MatrixXd a = sxy * syy.ldlt().solve(sxy.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), sxx);
  double total = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    total += std::sqrt(std::max(es.eigenvalues()(k), 0.0));
  return total;
}

}  // namespace mvocc::oracle
