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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvocc/autodiff.hpp"
#include "mvocc/errors.hpp"
#include "mvocc/linalg.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

enum class AlignKind { Dis, Sim, Dcca };
enum class Similarity { Dot, Cosine };

inline std::string_view to_string(AlignKind k) {
  switch (k) {
    case AlignKind::Dis: return "DIS";
    case AlignKind::Sim: return "SIM";
    case AlignKind::Dcca: return "DCCA";
  }
  return "?";
}

struct AlignSpec {
  AlignKind kind = AlignKind::Dis;
  double alpha = 0.1;   // weight of the alignment loss
  int p = 2;            // DIS norm order
  double margin = 1.0;  // SIM hinge margin
  Similarity similarity = Similarity::Dot;
  double r = 1e-4;      // DCCA covariance regularization

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("alignment weight alpha must be >= 0");
    if (p != 1 && p != 2) throw ConfigError("DIS norm order p must be 1 or 2");
    if (!(margin >= 0.0)) throw ConfigError("SIM margin m must be >= 0");
    if (!(r > 0.0)) throw ConfigError("DCCA regularization r must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Canonical correlation between two embedding batches.

struct DccaForward {
  double corr = 0.0;
  double cond_ii = 1.0;  // condition numbers of the regularized covariances
  double cond_jj = 1.0;
  bool ill_conditioned = false;
};

namespace detail {

inline Tensor center_columns(const Tensor& h) {
  Tensor out = h;
  const std::size_t n = h.rows(), d = h.cols();
  for (std::size_t c = 0; c < d; ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < n; ++r) m += h(r, c);
    m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) out(r, c) -= m;
  }
  return out;
}

struct DccaState {
  Tensor hi, hj;        // centered batches [N x D_i], [N x D_j]
  Tensor ai, aj;        // Σ_ii^{-1/2}, Σ_jj^{-1/2}
  Tensor t;             // T = Σ_ii^{-1/2} Σ_ij Σ_jj^{-1/2}
  EigenSystem ttt;      // eigen-system of T·Tᵀ
  double cond_ii = 1.0, cond_jj = 1.0;
};

inline double condition(const EigenSystem& es) {
  const double hi = es.values[0];
  const double lo = es.values[es.values.size() - 1];
  return lo > 0.0 ? hi / lo : INFINITY;
}

inline DccaState dcca_state(const Tensor& h_i, const Tensor& h_j, double r) {
  const std::size_t n = h_i.rows();
  if (n < 2 || h_j.rows() != n) {
    throw BatchTooSmallError("DCCA needs at least 2 rows per view with equal counts, got " +
                             std::to_string(h_i.rows()) + " and " + std::to_string(h_j.rows()));
  }
  DccaState s;
  s.hi = center_columns(h_i);
  s.hj = center_columns(h_j);
  const double inv = 1.0 / static_cast<double>(n - 1);
  Tensor sii = inv * matmul_tn(s.hi, s.hi);
  Tensor sjj = inv * matmul_tn(s.hj, s.hj);
  for (std::size_t k = 0; k < sii.rows(); ++k) sii(k, k) += r;
  for (std::size_t k = 0; k < sjj.rows(); ++k) sjj(k, k) += r;
  const Tensor sij = inv * matmul_tn(s.hi, s.hj);
  const EigenSystem ei = sym_eig(sii);
  const EigenSystem ej = sym_eig(sjj);
  s.cond_ii = condition(ei);
  s.cond_jj = condition(ej);
  auto inv_sqrt = [](double l) { return 1.0 / std::sqrt(std::max(l, 1e-300)); };
  s.ai = spectral_map(ei, inv_sqrt);
  s.aj = spectral_map(ej, inv_sqrt);
  s.t = matmul(matmul(s.ai, sij), s.aj);
  s.ttt = sym_eig(matmul_nt(s.t, s.t));
  return s;
}

inline double trace_norm(const EigenSystem& ttt) {
  double c = 0.0;
  for (double l : ttt.values.data()) c += std::sqrt(std::max(l, 0.0));
  return c;
}

}  // namespace detail

/// Threshold above which a regularized covariance counts as near-singular.
inline constexpr double kDccaConditionLimit = 1e12;

/// Corr(i, j): trace norm of the whitened cross-covariance of two batches.
inline DccaForward dcca_correlation(const Tensor& h_i, const Tensor& h_j, double r) {
  const detail::DccaState s = detail::dcca_state(h_i, h_j, r);
  DccaForward f;
  f.corr = detail::trace_norm(s.ttt);
  f.cond_ii = s.cond_ii;
  f.cond_jj = s.cond_jj;
  f.ill_conditioned = s.cond_ii > kDccaConditionLimit || s.cond_jj > kDccaConditionLimit;
  return f;
}

/// Diagnostics collected while alignment nodes are evaluated.
struct AlignDiagnostics {
  std::vector<std::string> warnings;
};

/*
 Custom node for Corr(i, j). The backward pass uses the closed-form gradient
 of the trace norm with T = U·D·Vᵀ:
   ∇_ij = Σ_ii^{-1/2} U Vᵀ Σ_jj^{-1/2}
   ∇_ii = -1/2 Σ_ii^{-1/2} U D Uᵀ Σ_ii^{-1/2}     (likewise ∇_jj with V)
   dCorr/dH̄_i = (2 H̄_i ∇_ii + H̄_j ∇_ijᵀ) / (N-1)
 where U D Uᵀ = (TTᵀ)^{1/2}, U Vᵀ = (TTᵀ)^{-1/2} T and V D Vᵀ = (TᵀT)^{1/2},
 followed by projection through the centering step.
*/
inline Var dcca_corr(Var h_i, Var h_j, double r,
                     std::shared_ptr<AlignDiagnostics> diag = nullptr) {
  Graph& g = *h_i.graph;
  const Shape& si = g.shape(h_i);
  const Shape& sj = g.shape(h_j);
  if (si.size() != 2 || sj.size() != 2 || si[0] != sj[0]) {
    throw ShapeError("dcca_corr: batches " + shape_str(si) + " and " + shape_str(sj) +
                     " are incompatible");
  }
  if (si[0] < 2) throw BatchTooSmallError("DCCA needs a batch of at least 2 rows");
  return g.custom(
      "dcca_corr", {h_i, h_j}, {1},
      [r, diag](std::span<const Tensor* const> in) {
        const DccaForward f = dcca_correlation(*in[0], *in[1], r);
        if (diag && f.ill_conditioned) {
          diag->warnings.push_back("DCCA covariance near-singular (condition " +
                                   std::to_string(std::max(f.cond_ii, f.cond_jj)) + ")");
        }
        return Tensor::scalar(f.corr);
      },
      [r](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        const detail::DccaState s = detail::dcca_state(*in[0], *in[1], r);
        const Tensor sqrt_ttt =
            spectral_map(s.ttt, [](double l) { return std::sqrt(std::max(l, 0.0)); });
        const Tensor inv_sqrt_ttt = spectral_map(
            s.ttt, [](double l) { return l > 1e-12 ? 1.0 / std::sqrt(l) : 0.0; });
        const Tensor sqrt_ttt_t = spectral_map(sym_eig(matmul_tn(s.t, s.t)), [](double l) {
          return std::sqrt(std::max(l, 0.0));
        });
        const Tensor uvt = matmul(inv_sqrt_ttt, s.t);
        const Tensor d_ij = matmul(matmul(s.ai, uvt), s.aj);
        const Tensor d_ii = -0.5 * matmul(matmul(s.ai, sqrt_ttt), s.ai);
        const Tensor d_jj = -0.5 * matmul(matmul(s.aj, sqrt_ttt_t), s.aj);
        const double c = gout[0] / static_cast<double>(s.hi.rows() - 1);
        Tensor gi = c * (2.0 * matmul(s.hi, d_ii) + matmul_nt(s.hj, d_ij));
        Tensor gj = c * (2.0 * matmul(s.hj, d_jj) + matmul(s.hi, d_ij));
        return std::vector<Tensor>{detail::center_columns(gi), detail::center_columns(gj)};
      });
}

struct AlignmentTerm {
  Var measure;
  std::shared_ptr<AlignDiagnostics> diagnostics;
};

/// Quantitative alignment 𝒜 over per-view batches H^(1..V), each [N x D].
///   DIS:  -Σ_n Σ_{i<j} ‖h_n^(i) - h_n^(j)‖_p^p
///   SIM:  -Σ_{i<j} Σ_{a≠b} max(0, m - s(h_a^i, h_a^j) + s(h_a^i, h_b^j))
///   DCCA:  Σ_{i<j} Corr(i, j)
inline AlignmentTerm alignment_measure(const AlignSpec& spec, std::span<const Var> h,
                                       std::shared_ptr<AlignDiagnostics> diag = nullptr) {
  spec.validate();
  if (h.size() < 2) {
    throw ArityError("alignment needs at least 2 views, got " + std::to_string(h.size()));
  }
  Graph& g = *h.front().graph;
  const Shape s0 = g.shape(h.front());
  for (const Var& v : h) {
    const Shape& s = g.shape(v);
    if (s.size() != 2 || s[0] != s0[0]) {
      throw ShapeError("alignment: per-view batches must be matrices with equal row counts");
    }
    if (spec.kind != AlignKind::Dcca && s != s0) {
      throw ShapeError("alignment: " + std::string(to_string(spec.kind)) +
                       " requires equal embedding widths");
    }
  }
  if (spec.kind != AlignKind::Dis && s0[0] < 2) {
    throw BatchTooSmallError(std::string(to_string(spec.kind)) +
                             " alignment needs a batch of at least 2");
  }

  if (!diag) diag = std::make_shared<AlignDiagnostics>();
  std::vector<Var> terms;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      switch (spec.kind) {
        case AlignKind::Dis: {
          Var d = sub(h[i], h[j]);
          terms.push_back(spec.p == 2 ? sum_squares(d) : sum(abs(d)));
          break;
        }
        case AlignKind::Sim: {
          Var a = h[i], b = h[j];
          if (spec.similarity == Similarity::Cosine) {
            a = row_normalize(a);
            b = row_normalize(b);
          }
          terms.push_back(pairwise_hinge(matmul_nt(a, b), spec.margin));
          break;
        }
        case AlignKind::Dcca:
          terms.push_back(dcca_corr(h[i], h[j], spec.r, diag));
          break;
      }
    }
  }
  Var total = terms.size() == 1 ? terms.front() : add_n(terms);
  return {spec.kind == AlignKind::Dcca ? total : scale(total, -1.0), diag};
}

/// L = L_r + α·(−𝒜)
inline Var combined_loss(const AlignSpec& spec, Var reconstruction, Var measure) {
  return add(reconstruction, scale(measure, -spec.alpha));
}

}  // namespace mvocc
