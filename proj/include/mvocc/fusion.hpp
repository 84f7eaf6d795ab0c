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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvocc/autodiff.hpp"
#include "mvocc/nn.hpp"
#include "mvocc/rng.hpp"

namespace mvocc {

enum class FusionKind { Sum, Max, NN, TF };

inline std::string_view to_string(FusionKind k) {
  switch (k) {
    case FusionKind::Sum: return "SUM";
    case FusionKind::Max: return "MAX";
    case FusionKind::NN: return "NN";
    case FusionKind::TF: return "TF";
  }
  return "?";
}

struct FusionSpec {
  FusionKind kind = FusionKind::Sum;
  /// Width of the joint embedding. SUM and MAX require it to equal the
  /// per-view embedding width.
  std::size_t out_dim = 32;
  // NN: hidden widths between the concatenation and the output layer.
  std::vector<std::size_t> nn_hidden;
  Activation nn_activation = Activation::Tanh;
  // TF: rank of the factorized weight tensor.
  std::size_t rank = 16;
};

/// Learnable fusion parameters. TF factor v is stored as an
/// [R*D_out x d_v] matrix whose row r*D_out + k holds w_{r,k}^{(v)}, i.e. the
/// row-major layout of an R x D_out x d_v tensor.
struct FusionParams {
  Params nn;
  std::vector<Tensor> factors;
  Tensor bias;
};

inline MlpSpec fusion_nn_spec(const FusionSpec& spec, std::span<const std::size_t> view_dims) {
  MlpSpec m;
  std::size_t in = 0;
  for (std::size_t d : view_dims) in += d;
  m.widths.push_back(in);
  m.widths.insert(m.widths.end(), spec.nn_hidden.begin(), spec.nn_hidden.end());
  m.widths.push_back(spec.out_dim);
  m.hidden = spec.nn_activation;
  m.output = spec.nn_activation;
  m.use_bias = true;
  return m;
}

inline void validate_fusion(const FusionSpec& spec, std::span<const std::size_t> view_dims) {
  if (view_dims.size() < 2) {
    throw ArityError("fusion needs at least 2 views, got " + std::to_string(view_dims.size()));
  }
  if (spec.out_dim == 0) throw ConfigError("fusion output width must be positive");
  if (spec.kind == FusionKind::Sum || spec.kind == FusionKind::Max) {
    for (std::size_t d : view_dims) {
      if (d != view_dims.front()) {
        throw ShapeError(std::string(to_string(spec.kind)) +
                         " fusion requires equal embedding widths");
      }
    }
  }
  if (spec.kind == FusionKind::TF && spec.rank == 0) {
    throw ConfigError("TF fusion rank must be at least 1");
  }
}

inline FusionParams init_fusion(const FusionSpec& spec, std::span<const std::size_t> view_dims,
                                Rng& rng) {
  validate_fusion(spec, view_dims);
  FusionParams p;
  if (spec.kind == FusionKind::NN) {
    p.nn = init_mlp(fusion_nn_spec(spec, view_dims), rng);
  } else if (spec.kind == FusionKind::TF) {
    for (std::size_t d : view_dims) {
      const double bound = std::sqrt(6.0 / static_cast<double>(d + spec.out_dim));
      Tensor f({spec.rank * spec.out_dim, d});
      for (double& v : f.data()) v = rng.uniform(-bound, bound);
      p.factors.push_back(std::move(f));
    }
    p.bias = Tensor::zeros({spec.out_dim});
  }
  return p;
}

struct BoundFusion {
  FusionSpec spec;
  BoundMlp nn;
  std::vector<Var> factors;
  Var bias;
};

inline BoundFusion bind_fusion(ParamBinder& binder, const FusionSpec& spec,
                               std::span<const std::size_t> view_dims, FusionParams& p) {
  BoundFusion b{spec, {}, {}, {}};
  if (spec.kind == FusionKind::NN) {
    b.nn = bind_mlp(binder, fusion_nn_spec(spec, view_dims), p.nn);
  } else if (spec.kind == FusionKind::TF) {
    for (Tensor& f : p.factors) b.factors.push_back(binder.bind(f));
    b.bias = binder.bind(p.bias);
  }
  return b;
}

inline BoundFusion bind_fusion(Graph& g, const FusionSpec& spec,
                               std::span<const std::size_t> view_dims, const FusionParams& p) {
  BoundFusion b{spec, {}, {}, {}};
  if (spec.kind == FusionKind::NN) {
    b.nn = bind_mlp(g, fusion_nn_spec(spec, view_dims), p.nn);
  } else if (spec.kind == FusionKind::TF) {
    for (const Tensor& f : p.factors) b.factors.push_back(g.leaf(f));
    b.bias = g.leaf(p.bias);
  }
  return b;
}

/// Mean of the view embeddings.
inline Var fuse_sum(std::span<const Var> h) {
  return scale(add_n(h), 1.0 / static_cast<double>(h.size()));
}

/// Low-rank tensor fusion:
///   h(k) = Σ_r Π_v ⟨w_{r,k}^{(v)}, h^{(v)}⟩ + b(k)
/// computed per batch as block_sum(Π_v H_v·F_vᵀ) + b.
inline Var fuse_tensor(std::span<const Var> h, std::span<const Var> factors, Var bias,
                       std::size_t rank) {
  if (factors.size() != h.size()) {
    throw ShapeError("TF fusion: " + std::to_string(factors.size()) + " factors for " +
                     std::to_string(h.size()) + " views");
  }
  Var prod = matmul_nt(h[0], factors[0]);
  for (std::size_t v = 1; v < h.size(); ++v) prod = mul(prod, matmul_nt(h[v], factors[v]));
  return add_bias(block_sum(prod, rank), bias);
}

/// Maps per-view embeddings (each [N x d_v]) to a joint embedding [N x D].
inline Var fuse(const BoundFusion& f, std::span<const Var> h) {
  if (h.size() < 2) {
    throw ArityError("fuse needs at least 2 views, got " + std::to_string(h.size()));
  }
  Graph& g = *h.front().graph;
  std::vector<std::size_t> dims;
  for (const Var& v : h) {
    const Shape& s = g.shape(v);
    if (s.size() != 2 || s[0] != g.shape(h.front())[0]) {
      throw ShapeError("fuse: embeddings must be matrices with equal row counts");
    }
    dims.push_back(s[1]);
  }
  validate_fusion(f.spec, dims);
  switch (f.spec.kind) {
    case FusionKind::Sum: return fuse_sum(h);
    case FusionKind::Max: return max_n(h);
    case FusionKind::NN: return f.nn(concat_cols(h));
    case FusionKind::TF: return fuse_tensor(h, f.factors, f.bias, f.spec.rank);
  }
  throw ConfigError("unknown fusion kind");
}

}  // namespace mvocc
