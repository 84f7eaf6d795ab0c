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
#include <numeric>
#include <string>
#include <vector>

#include "mvocc/errors.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

struct EigenSystem {
  Tensor values;   // [d], descending
  Tensor vectors;  // [d x d], column i pairs with values[i]
};

namespace detail {

inline double max_offdiag(const Tensor& a) {
  const std::size_t n = a.rows();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

}  // namespace detail

/*
 Symmetric eigendecomposition by cyclic Jacobi rotations.

 The input is symmetrized as (A + Aᵀ)/2. Sweeps stop once the largest
 off-diagonal magnitude drops below 1e-11 (relative to the matrix scale when
 that exceeds one). Eigenvalues are returned in descending order.
*/
inline EigenSystem sym_eig(const Tensor& input, int max_sweeps = 100) {
  require_matrix(input, "sym_eig");
  const std::size_t n = input.rows();
  if (input.cols() != n) {
    throw ShapeError("sym_eig: matrix is not square: " + shape_str(input.shape()));
  }
  Tensor a({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = 0.5 * (input(i, j) + input(j, i));
  Tensor q = Tensor::identity(n);

  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-11 * std::max(1.0, scale);

  int sweep = 0;
  for (; sweep < max_sweeps && detail::max_offdiag(a) >= tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (std::abs(apr) < 1e-300) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akr = a(k, r);
          a(k, p) = c * akp - s * akr;
          a(k, r) = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), ark = a(r, k);
          a(p, k) = c * apk - s * ark;
          a(r, k) = s * apk + c * ark;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
    }
  }
  const double residual = detail::max_offdiag(a);
  if (residual >= tol) {
    throw ConvergenceError("sym_eig: no convergence after " +
                               std::to_string(max_sweeps) +
                               " sweeps, off-diagonal residual " +
                               std::to_string(residual),
                           residual);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i) > a(j, j);
  });
  EigenSystem out{Tensor({n}), Tensor({n, n})};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = q(k, order[c]);
  }
  return out;
}

/// Q · diag(f(λ)) · Qᵀ for an eigen-system.
template <class F>
Tensor spectral_map(const EigenSystem& es, F f) {
  const std::size_t n = es.values.size();
  Tensor out({n, n});
  for (std::size_t c = 0; c < n; ++c) {
    const double w = f(es.values[c]);
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double qi = es.vectors(i, c) * w;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += qi * es.vectors(j, c);
    }
  }
  return out;
}

/// Inverse square root of a positive semi-definite matrix, eigenvalues
/// floored at `floor` before inversion.
inline Tensor inv_sqrt_psd(const Tensor& a, double floor) {
  const EigenSystem es = sym_eig(a);
  const double smallest = es.values[es.values.size() - 1];
  if (smallest < -1e-9) {
    throw NotPsdError("inv_sqrt_psd: eigenvalue " + std::to_string(smallest) +
                      " is below -1e-9");
  }
  return spectral_map(es, [floor](double l) {
    return 1.0 / std::sqrt(std::max(l, floor));
  });
}

}  // namespace mvocc
