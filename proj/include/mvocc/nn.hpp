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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvocc/autodiff.hpp"
#include "mvocc/errors.hpp"
#include "mvocc/rng.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

enum class Activation { Linear, Tanh, Relu, Sigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "linear") return Activation::Linear;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + std::string(s) +
                    "' (expected linear, tanh, relu or sigmoid)");
}

inline Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::Linear: return x;
    case Activation::Tanh: return tanh(x);
    case Activation::Relu: return relu(x);
    case Activation::Sigmoid: return sigmoid(x);
  }
  return x;
}

/// Layer widths of a fully-connected network, input first.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation hidden = Activation::Tanh;
  Activation output = Activation::Linear;
  bool use_bias = true;

  std::size_t layers() const noexcept { return widths.empty() ? 0 : widths.size() - 1; }
  std::size_t input_width() const noexcept { return widths.front(); }
  std::size_t output_width() const noexcept { return widths.back(); }

  void validate() const {
    if (widths.size() < 2) throw ConfigError("MlpSpec needs at least two widths");
    for (std::size_t w : widths)
      if (w == 0) throw ConfigError("MlpSpec widths must be positive");
  }

  /// Decoder mirroring this spec (same hidden widths, reversed).
  MlpSpec mirrored() const {
    MlpSpec m = *this;
    std::reverse(m.widths.begin(), m.widths.end());
    return m;
  }
};

/// Weights are [in x out]; layer output is act(x·W + b).
struct Params {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;  // empty when the spec has no bias

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (const Tensor& w : weights) n += w.size();
    for (const Tensor& b : biases) n += b.size();
    return n;
  }

  friend bool operator==(const Params&, const Params&) = default;
};

/// Glorot-uniform weights, zero biases.
inline Params init_mlp(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Params p;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w({in, out});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    if (spec.use_bias) p.biases.push_back(Tensor::zeros({out}));
  }
  return p;
}

/// Collects the parameter tensors bound into one graph so that gradients can
/// be gathered in a fixed order for the optimizer.
class ParamBinder {
 public:
  explicit ParamBinder(Graph& g) : graph_(&g) {}

  Var bind(Tensor& t) {
    Var v = graph_->leaf(t);
    tensors_.push_back(&t);
    vars_.push_back(v);
    return v;
  }

  Graph& graph() const noexcept { return *graph_; }
  std::span<Tensor* const> tensors() const noexcept { return tensors_; }
  std::span<const Var> vars() const noexcept { return vars_; }

  std::vector<Tensor> gradients(const Gradients& g) const {
    std::vector<Tensor> out;
    out.reserve(vars_.size());
    for (Var v : vars_) out.push_back(g[v]);
    return out;
  }

 private:
  Graph* graph_;
  std::vector<Tensor*> tensors_;
  std::vector<Var> vars_;
};

/// An MLP whose parameters live on a graph.
struct BoundMlp {
  MlpSpec spec;
  std::vector<Var> weights;
  std::vector<Var> biases;

  Var operator()(Var x) const {
    Graph& g = *x.graph;
    const Shape& s = g.shape(x);
    if (s.size() != 2 || s[1] != spec.input_width()) {
      throw ShapeError("mlp_forward: input " + shape_str(s) + " does not match width " +
                       std::to_string(spec.input_width()));
    }
    Var h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      h = matmul(h, weights[l]);
      if (!biases.empty()) h = add_bias(h, biases[l]);
      h = activate(h, l + 1 == weights.size() ? spec.output : spec.hidden);
    }
    return h;
  }
};

inline BoundMlp bind_mlp(ParamBinder& binder, const MlpSpec& spec, Params& params) {
  BoundMlp m{spec, {}, {}};
  for (Tensor& w : params.weights) m.weights.push_back(binder.bind(w));
  for (Tensor& b : params.biases) m.biases.push_back(binder.bind(b));
  return m;
}

/// Binds params as constant leaves (no optimizer bookkeeping).
inline BoundMlp bind_mlp(Graph& g, const MlpSpec& spec, const Params& params) {
  BoundMlp m{spec, {}, {}};
  for (const Tensor& w : params.weights) m.weights.push_back(g.leaf(w));
  for (const Tensor& b : params.biases) m.biases.push_back(g.leaf(b));
  return m;
}

inline Var mlp_forward(const Params& params, const MlpSpec& spec, Var x) {
  return bind_mlp(*x.graph, spec, params)(x);
}

/// Evaluates an MLP on a batch outside of training.
inline Tensor mlp_apply(const Params& params, const MlpSpec& spec, const Tensor& x) {
  Graph g;
  Var out = mlp_forward(params, spec, g.leaf(x));
  return g.forward_eval(out);
}

/// Adam with the L2 term λ·θ folded into the gradient before the moment
/// updates. Moments are allocated on the first step.
class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double l2 = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Options o) : opt_(o) {}

  const Options& options() const noexcept { return opt_; }
  long step_count() const noexcept { return step_; }
  std::span<const Tensor> first_moments() const noexcept { return m_; }
  std::span<const Tensor> second_moments() const noexcept { return v_; }

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) {
      throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                       std::to_string(grads.size()) + " gradients");
    }
    if (m_.empty()) {
      for (Tensor* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
      }
    }
    if (m_.size() != params.size()) {
      throw ShapeError("adam: parameter list changed between steps");
    }
    ++step_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = *params[k];
      const Tensor& g = grads[k];
      if (g.shape() != p.shape() || m_[k].shape() != p.shape()) {
        throw ShapeError("adam: gradient " + shape_str(g.shape()) + " does not match parameter " +
                         shape_str(p.shape()));
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i] + opt_.l2 * p[i];
        m_[k][i] = opt_.beta1 * m_[k][i] + (1.0 - opt_.beta1) * gi;
        v_[k][i] = opt_.beta2 * v_[k][i] + (1.0 - opt_.beta2) * gi * gi;
        const double mhat = m_[k][i] / c1;
        const double vhat = v_[k][i] / c2;
        p[i] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
      }
    }
  }

 private:
  Options opt_;
  long step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Hidden width used by the default per-view architecture.
inline std::size_t default_hidden_width(std::size_t input_dim) {
  return std::max<std::size_t>(64, input_dim / 2);
}

/// [d, max(64, d/2), D] with tanh hidden units and linear output.
inline MlpSpec default_encoder(std::size_t input_dim, std::size_t embed_dim, bool use_bias = true) {
  return MlpSpec{{input_dim, default_hidden_width(input_dim), embed_dim},
                 Activation::Tanh, Activation::Linear, use_bias};
}

}  // namespace mvocc
