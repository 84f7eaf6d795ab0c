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
 Reverse-mode automatic differentiation.

 A Graph records nodes in creation order, so every parent id is smaller than
 its child id and creation order is a topological order. Leaves are either
 bound to a value at creation or declared with a shape and bound later.
 Shapes are inferred when a node is created, so shape errors surface while
 the graph is being built; values are computed lazily by forward_eval and
 cached until a leaf is rebound.

 Usage:
   Graph g;
   Var w = g.leaf(weights, "w");
   Var x = g.leaf(inputs);
   Var loss = mean(square(matmul(x, w)));
   double v = g.forward_eval(loss).item();
   Gradients grads = g.backward(loss);
   const Tensor& dw = grads[w];
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvocc/errors.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

class Graph;

/// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;
};

using ForwardFn = std::function<Tensor(std::span<const Tensor* const>)>;
/// Receives parent values, the node's value and the gradient flowing into the
/// node; returns one gradient per parent (same order, same shapes).
using BackwardFn = std::function<std::vector<Tensor>(
    std::span<const Tensor* const>, const Tensor&, const Tensor&)>;

class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<std::optional<Tensor>> g) : grads_(std::move(g)) {}

  const Tensor& operator[](Var v) const { return at(v.id); }
  const Tensor& at(std::size_t id) const {
    if (id >= grads_.size() || !grads_[id]) {
      throw MissingInputError("no gradient recorded for node " + std::to_string(id) +
                              " (not a leaf)");
    }
    return *grads_[id];
  }
  bool contains(std::size_t id) const {
    return id < grads_.size() && grads_[id].has_value();
  }

 private:
  std::vector<std::optional<Tensor>> grads_;
};

class Graph {
 public:
  struct Node {
    std::string op;
    Shape shape;
    std::vector<std::size_t> parents;
    ForwardFn forward;
    BackwardFn backward;
    std::optional<Tensor> value;
    bool leaf = false;
    std::string name;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf bound to a value.
  Var leaf(Tensor value, std::string name = {}) {
    Node n;
    n.op = "leaf";
    n.shape = value.shape();
    n.value = std::move(value);
    n.leaf = true;
    n.name = std::move(name);
    return push(std::move(n));
  }

  /// Unbound leaf with a declared shape; bind() before evaluating.
  Var placeholder(Shape shape, std::string name = {}) {
    Node n;
    n.op = "leaf";
    n.shape = std::move(shape);
    n.leaf = true;
    n.name = std::move(name);
    return push(std::move(n));
  }

  void bind(Var v, Tensor value) {
    Node& n = mutable_node(v.id);
    if (!n.leaf) throw Error("bind: node " + std::to_string(v.id) + " is not a leaf");
    if (value.shape() != n.shape) {
      throw ShapeError("bind: leaf '" + n.name + "' declared " + shape_str(n.shape) +
                       ", got " + shape_str(value.shape()));
    }
    n.value = std::move(value);
    invalidate();
  }

  /// Records an operation node. Used by the built-in primitives and by
  /// custom-gradient nodes defined elsewhere.
  Var custom(std::string op, std::vector<Var> parents, Shape shape, ForwardFn forward,
             BackwardFn backward) {
    Node n;
    n.op = std::move(op);
    n.shape = std::move(shape);
    n.forward = std::move(forward);
    n.backward = std::move(backward);
    for (const Var& p : parents) {
      if (p.graph != this) throw Error("custom: parent belongs to another graph");
      n.parents.push_back(p.id);
    }
    return push(std::move(n));
  }

  const Shape& shape(Var v) const { return node(v.id).shape; }
  const Node& node(std::size_t id) const {
    if (id >= nodes_.size()) throw Error("unknown node id " + std::to_string(id));
    return nodes_[id];
  }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Evaluates `out` and every ancestor, caching intermediate values.
  const Tensor& forward_eval(Var out) {
    const std::vector<bool> need = ancestors(out.id);
    for (std::size_t id = 0; id <= out.id; ++id) {
      if (!need[id]) continue;
      Node& n = nodes_[id];
      if (n.value) continue;
      if (n.leaf) {
        throw MissingInputError("leaf " + std::to_string(id) +
                                (n.name.empty() ? "" : " '" + n.name + "'") + " is unbound");
      }
      std::vector<const Tensor*> in;
      in.reserve(n.parents.size());
      for (std::size_t p : n.parents) in.push_back(&*nodes_[p].value);
      n.value = n.forward(in);
    }
    return *nodes_[out.id].value;
  }

  const Tensor& value(Var v) { return forward_eval(v); }

  /// Gradients of a scalar node with respect to every leaf. Leaves that do not
  /// influence the loss receive zero tensors.
  Gradients backward(Var loss) {
    if (shape_numel(node(loss.id).shape) != 1) {
      throw ShapeError("backward: loss must be scalar, got " +
                       shape_str(node(loss.id).shape));
    }
    forward_eval(loss);
    std::vector<std::optional<Tensor>> grads(nodes_.size());
    grads[loss.id] = Tensor(node(loss.id).shape, 1.0);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.leaf || !grads[id]) continue;
      std::vector<const Tensor*> in;
      in.reserve(n.parents.size());
      for (std::size_t p : n.parents) in.push_back(&*nodes_[p].value);
      std::vector<Tensor> pg = n.backward(in, *n.value, *grads[id]);
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const std::size_t p = n.parents[k];
        if (grads[p]) {
          *grads[p] += pg[k];
        } else {
          grads[p] = std::move(pg[k]);
        }
      }
    }
    std::vector<std::optional<Tensor>> out(nodes_.size());
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      if (!nodes_[id].leaf) continue;
      out[id] = grads[id] ? std::move(*grads[id]) : Tensor::zeros(nodes_[id].shape);
    }
    return Gradients(std::move(out));
  }

 private:
  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  Node& mutable_node(std::size_t id) {
    if (id >= nodes_.size()) throw Error("unknown node id " + std::to_string(id));
    return nodes_[id];
  }

  void invalidate() {
    for (Node& n : nodes_)
      if (!n.leaf) n.value.reset();
  }

  std::vector<bool> ancestors(std::size_t out) const {
    std::vector<bool> need(out + 1, false);
    need[out] = true;
    for (std::size_t id = out + 1; id-- > 0;) {
      if (!need[id]) continue;
      for (std::size_t p : nodes_[id].parents) need[p] = true;
    }
    return need;
  }

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives

namespace detail {

inline Graph& graph_of(std::initializer_list<Var> vs) {
  Graph* g = vs.begin()->graph;
  for (const Var& v : vs)
    if (v.graph != g) throw Error("operands belong to different graphs");
  return *g;
}

inline Graph& graph_of(std::span<const Var> vs) {
  if (vs.empty()) throw ArityError("operation needs at least one operand");
  Graph* g = vs.front().graph;
  for (const Var& v : vs)
    if (v.graph != g) throw Error("operands belong to different graphs");
  return *g;
}

inline void require_same(const Graph& g, Var a, Var b, const char* op) {
  if (g.shape(a) != g.shape(b)) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(g.shape(a)) + " and " +
                     shape_str(g.shape(b)) + " differ");
  }
}

inline void require_rank2(const Graph& g, Var a, const char* op) {
  if (g.shape(a).size() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_str(g.shape(a)));
  }
}

template <class F, class DF>
Var unary(Var a, const char* op, F f, DF df) {
  Graph& g = *a.graph;
  return g.custom(
      op, {a}, g.shape(a),
      [f](std::span<const Tensor* const> in) { return map(*in[0], f); },
      [df](std::span<const Tensor* const> in, const Tensor& out, const Tensor& gout) {
        Tensor gi(in[0]->shape());
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] = gout[i] * df((*in[0])[i], out[i]);
        return std::vector<Tensor>{std::move(gi)};
      });
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Graph& g = detail::graph_of({a, b});
  detail::require_rank2(g, a, "matmul");
  detail::require_rank2(g, b, "matmul");
  const Shape& sa = g.shape(a);
  const Shape& sb = g.shape(b);
  if (sa[1] != sb[0]) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_str(sa) + " and " +
                     shape_str(sb));
  }
  return g.custom(
      "matmul", {a, b}, {sa[0], sb[1]},
      [](std::span<const Tensor* const> in) { return matmul(*in[0], *in[1]); },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{matmul_nt(gout, *in[1]), matmul_tn(*in[0], gout)};
      });
}

/// a · bᵀ
inline Var matmul_nt(Var a, Var b) {
  Graph& g = detail::graph_of({a, b});
  detail::require_rank2(g, a, "matmul_nt");
  detail::require_rank2(g, b, "matmul_nt");
  const Shape& sa = g.shape(a);
  const Shape& sb = g.shape(b);
  if (sa[1] != sb[1]) {
    throw ShapeError("matmul_nt: inner dimensions disagree for " + shape_str(sa) + " and " +
                     shape_str(sb));
  }
  return g.custom(
      "matmul_nt", {a, b}, {sa[0], sb[0]},
      [](std::span<const Tensor* const> in) { return matmul_nt(*in[0], *in[1]); },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{matmul(gout, *in[1]), matmul_tn(gout, *in[0])};
      });
}

inline Var add(Var a, Var b) {
  Graph& g = detail::graph_of({a, b});
  detail::require_same(g, a, b, "add");
  return g.custom(
      "add", {a, b}, g.shape(a),
      [](std::span<const Tensor* const> in) { return *in[0] + *in[1]; },
      [](std::span<const Tensor* const>, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{gout, gout};
      });
}

inline Var sub(Var a, Var b) {
  Graph& g = detail::graph_of({a, b});
  detail::require_same(g, a, b, "sub");
  return g.custom(
      "sub", {a, b}, g.shape(a),
      [](std::span<const Tensor* const> in) { return *in[0] - *in[1]; },
      [](std::span<const Tensor* const>, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{gout, -1.0 * gout};
      });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  Graph& g = detail::graph_of({a, b});
  detail::require_same(g, a, b, "mul");
  return g.custom(
      "mul", {a, b}, g.shape(a),
      [](std::span<const Tensor* const> in) {
        return zip(*in[0], *in[1], std::multiplies<>{});
      },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{zip(gout, *in[1], std::multiplies<>{}),
                                   zip(gout, *in[0], std::multiplies<>{})};
      });
}

inline Var scale(Var a, double c) {
  Graph& g = *a.graph;
  return g.custom(
      "scale", {a}, g.shape(a),
      [c](std::span<const Tensor* const> in) { return c * *in[0]; },
      [c](std::span<const Tensor* const>, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{c * gout};
      });
}

/// Adds a bias vector [m] to every row of a [n x m] matrix.
inline Var add_bias(Var a, Var bias) {
  Graph& g = detail::graph_of({a, bias});
  detail::require_rank2(g, a, "add_bias");
  const Shape& sa = g.shape(a);
  if (g.shape(bias) != Shape{sa[1]}) {
    throw ShapeError("add_bias: bias " + shape_str(g.shape(bias)) + " does not fit " +
                     shape_str(sa));
  }
  return g.custom(
      "add_bias", {a, bias}, sa,
      [](std::span<const Tensor* const> in) {
        Tensor out = *in[0];
        const Tensor& b = *in[1];
        for (std::size_t r = 0; r < out.rows(); ++r) {
          auto row = out.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
        }
        return out;
      },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        Tensor gb(in[1]->shape());
        for (std::size_t r = 0; r < gout.rows(); ++r) {
          auto row = gout.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
        }
        return std::vector<Tensor>{gout, std::move(gb)};
      });
}

inline Var tanh(Var a) {
  return detail::unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Var relu(Var a) {
  return detail::unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var sigmoid(Var a) {
  return detail::unary(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

/// |x| with subgradient 0 at 0.
inline Var abs(Var a) {
  return detail::unary(
      a, "abs", [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Var square(Var a) {
  return detail::unary(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Var sum(Var a) {
  Graph& g = *a.graph;
  return g.custom(
      "sum", {a}, {1},
      [](std::span<const Tensor* const> in) { return Tensor::scalar(sum(*in[0])); },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{Tensor(in[0]->shape(), gout[0])};
      });
}

inline Var mean(Var a) {
  const double n = static_cast<double>(shape_numel(a.graph->shape(a)));
  return scale(sum(a), 1.0 / n);
}

inline Var sum_squares(Var a) {
  Graph& g = *a.graph;
  return g.custom(
      "sum_squares", {a}, {1},
      [](std::span<const Tensor* const> in) {
        double s = 0.0;
        for (double v : in[0]->data()) s += v * v;
        return Tensor::scalar(s);
      },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>{(2.0 * gout[0]) * *in[0]};
      });
}

/// Mean squared error over all elements.
inline Var mse(Var a, Var b) { return mean(square(sub(a, b))); }

/// Column-wise concatenation of matrices with equal row counts.
inline Var concat_cols(std::span<const Var> parts) {
  Graph& g = detail::graph_of(parts);
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    detail::require_rank2(g, p, "concat_cols");
    const Shape& s = g.shape(p);
    if (widths.empty()) rows = s[0];
    if (s[0] != rows) {
      throw ShapeError("concat_cols: row counts differ (" + std::to_string(rows) + " vs " +
                       std::to_string(s[0]) + ")");
    }
    widths.push_back(s[1]);
    cols += s[1];
  }
  return g.custom(
      "concat_cols", std::vector<Var>(parts.begin(), parts.end()), {rows, cols},
      [rows, cols](std::span<const Tensor* const> in) {
        Tensor out({rows, cols});
        for (std::size_t r = 0; r < rows; ++r) {
          std::size_t off = 0;
          for (const Tensor* t : in) {
            auto src = t->row(r);
            std::copy(src.begin(), src.end(), out.row(r).begin() + off);
            off += src.size();
          }
        }
        return out;
      },
      [widths, rows](std::span<const Tensor* const>, const Tensor&, const Tensor& gout) {
        std::vector<Tensor> gs;
        std::size_t off = 0;
        for (std::size_t w : widths) {
          Tensor gi({rows, w});
          for (std::size_t r = 0; r < rows; ++r) {
            auto src = gout.row(r).subspan(off, w);
            std::copy(src.begin(), src.end(), gi.row(r).begin());
          }
          gs.push_back(std::move(gi));
          off += w;
        }
        return gs;
      });
}

inline Var add_n(std::span<const Var> parts) {
  Graph& g = detail::graph_of(parts);
  for (const Var& p : parts) detail::require_same(g, parts.front(), p, "add_n");
  return g.custom(
      "add_n", std::vector<Var>(parts.begin(), parts.end()), g.shape(parts.front()),
      [](std::span<const Tensor* const> in) {
        Tensor out = *in[0];
        for (std::size_t k = 1; k < in.size(); ++k) out += *in[k];
        return out;
      },
      [n = parts.size()](std::span<const Tensor* const>, const Tensor&, const Tensor& gout) {
        return std::vector<Tensor>(n, gout);
      });
}

/// Elementwise maximum across equally shaped operands. The gradient goes to
/// the arg-max operand per coordinate; ties go to the lowest operand index.
inline Var max_n(std::span<const Var> parts) {
  Graph& g = detail::graph_of(parts);
  for (const Var& p : parts) detail::require_same(g, parts.front(), p, "max_n");
  return g.custom(
      "max_n", std::vector<Var>(parts.begin(), parts.end()), g.shape(parts.front()),
      [](std::span<const Tensor* const> in) {
        Tensor out = *in[0];
        for (std::size_t k = 1; k < in.size(); ++k)
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], (*in[k])[i]);
        return out;
      },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        std::vector<Tensor> gs;
        for (const Tensor* t : in) gs.emplace_back(t->shape());
        for (std::size_t i = 0; i < gout.size(); ++i) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < in.size(); ++k)
            if ((*in[k])[i] > (*in[best])[i]) best = k;
          gs[best][i] = gout[i];
        }
        return gs;
      });
}

/// Sums `blocks` equal-width column blocks: [n x blocks*w] -> [n x w].
inline Var block_sum(Var a, std::size_t blocks) {
  Graph& g = *a.graph;
  detail::require_rank2(g, a, "block_sum");
  const Shape s = g.shape(a);
  if (blocks == 0 || s[1] % blocks != 0) {
    throw ShapeError("block_sum: " + std::to_string(blocks) + " blocks do not divide " +
                     shape_str(s));
  }
  const std::size_t w = s[1] / blocks;
  return g.custom(
      "block_sum", {a}, {s[0], w},
      [blocks, w](std::span<const Tensor* const> in) {
        const Tensor& x = *in[0];
        Tensor out({x.rows(), w});
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t c = 0; c < w; ++c) out(r, c) += x(r, b * w + c);
        return out;
      },
      [blocks, w](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        Tensor gi(in[0]->shape());
        for (std::size_t r = 0; r < gi.rows(); ++r)
          for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t c = 0; c < w; ++c) gi(r, b * w + c) = gout(r, c);
        return std::vector<Tensor>{std::move(gi)};
      });
}

/// Scales each row to unit Euclidean norm (rows with norm below eps are
/// divided by eps instead).
inline Var row_normalize(Var a, double eps = 1e-12) {
  Graph& g = *a.graph;
  detail::require_rank2(g, a, "row_normalize");
  auto norms = [eps](const Tensor& x) {
    std::vector<double> n(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double s = 0.0;
      for (double v : x.row(r)) s += v * v;
      n[r] = std::max(std::sqrt(s), eps);
    }
    return n;
  };
  return g.custom(
      "row_normalize", {a}, g.shape(a),
      [norms](std::span<const Tensor* const> in) {
        const Tensor& x = *in[0];
        const auto n = norms(x);
        Tensor out(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) / n[r];
        return out;
      },
      [norms, eps](std::span<const Tensor* const> in, const Tensor& out, const Tensor& gout) {
        const Tensor& x = *in[0];
        const auto n = norms(x);
        Tensor gi(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const bool clamped = n[r] <= eps;
          double dot = 0.0;
          for (std::size_t c = 0; c < x.cols(); ++c) dot += out(r, c) * gout(r, c);
          for (std::size_t c = 0; c < x.cols(); ++c) {
            gi(r, c) = clamped ? gout(r, c) / n[r] : (gout(r, c) - out(r, c) * dot) / n[r];
          }
        }
        return std::vector<Tensor>{std::move(gi)};
      });
}

/// Ranking hinge over a square similarity matrix S:
///   Σ_{a≠b} max(0, margin − S[a,a] + S[a,b]).
/// Subgradient 0 at the hinge kink.
inline Var pairwise_hinge(Var sim, double margin) {
  Graph& g = *sim.graph;
  detail::require_rank2(g, sim, "pairwise_hinge");
  const Shape& s = g.shape(sim);
  if (s[0] != s[1]) throw ShapeError("pairwise_hinge: similarity matrix must be square");
  return g.custom(
      "pairwise_hinge", {sim}, {1},
      [margin](std::span<const Tensor* const> in) {
        const Tensor& m = *in[0];
        double total = 0.0;
        for (std::size_t a = 0; a < m.rows(); ++a)
          for (std::size_t b = 0; b < m.cols(); ++b)
            if (a != b) total += std::max(0.0, margin - m(a, a) + m(a, b));
        return Tensor::scalar(total);
      },
      [margin](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        const Tensor& m = *in[0];
        Tensor gi(m.shape());
        for (std::size_t a = 0; a < m.rows(); ++a)
          for (std::size_t b = 0; b < m.cols(); ++b)
            if (a != b && margin - m(a, a) + m(a, b) > 0.0) {
              gi(a, b) += gout[0];
              gi(a, a) -= gout[0];
            }
        return std::vector<Tensor>{std::move(gi)};
      });
}

/// Per-row sum of squares: [n x m] -> [n x 1].
inline Var row_sum_squares(Var a) {
  Graph& g = *a.graph;
  detail::require_rank2(g, a, "row_sum_squares");
  return g.custom(
      "row_sum_squares", {a}, {g.shape(a)[0], 1},
      [](std::span<const Tensor* const> in) {
        const Tensor& x = *in[0];
        Tensor out({x.rows(), 1});
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (double v : x.row(r)) out[r] += v * v;
        return out;
      },
      [](std::span<const Tensor* const> in, const Tensor&, const Tensor& gout) {
        const Tensor& x = *in[0];
        Tensor gi(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) gi(r, c) = 2.0 * gout[r] * x(r, c);
        return std::vector<Tensor>{std::move(gi)};
      });
}

}  // namespace mvocc
