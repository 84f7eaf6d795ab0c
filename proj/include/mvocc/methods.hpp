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
 Trainers and scorers for the eleven multi-view one-class baselines.

   fusion      SUM MAX NN TF   encoders -> fuse -> per-view decoders
   alignment   DIS SIM DCCA    per-view autoencoders + alignment loss
   per-view    DAE DSV         independent autoencoders / deep SVDD
   prediction  PPRD SPRD       cross-view generation pretext tasks

 Every scorer returns an [N x V] matrix of anomaly scores (higher means more
 anomalous), each normalized by the dimension of the quantity it measures.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvocc/alignment.hpp"
#include "mvocc/autodiff.hpp"
#include "mvocc/data.hpp"
#include "mvocc/errors.hpp"
#include "mvocc/fusion.hpp"
#include "mvocc/nn.hpp"
#include "mvocc/rng.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

enum class MethodId { Sum, Max, NN, TF, Dis, Sim, Dcca, Dae, Dsv, Pprd, Sprd };

inline constexpr std::array<MethodId, 11> kAllMethods{
    MethodId::Sum, MethodId::Max, MethodId::NN,  MethodId::TF,   MethodId::Dis, MethodId::Sim,
    MethodId::Dcca, MethodId::Dae, MethodId::Dsv, MethodId::Pprd, MethodId::Sprd};

inline std::string_view to_string(MethodId m) {
  switch (m) {
    case MethodId::Sum: return "SUM";
    case MethodId::Max: return "MAX";
    case MethodId::NN: return "NN";
    case MethodId::TF: return "TF";
    case MethodId::Dis: return "DIS";
    case MethodId::Sim: return "SIM";
    case MethodId::Dcca: return "DCCA";
    case MethodId::Dae: return "DAE";
    case MethodId::Dsv: return "DSV";
    case MethodId::Pprd: return "PPRD";
    case MethodId::Sprd: return "SPRD";
  }
  return "?";
}

inline MethodId parse_method(std::string_view s) {
  for (MethodId m : kAllMethods)
    if (to_string(m) == s) return m;
  throw ConfigError("invalid method '" + std::string(s) +
                    "' (expected one of SUM, MAX, NN, TF, DIS, SIM, DCCA, DAE, DSV, PPRD, SPRD)");
}

inline bool is_fusion(MethodId m) {
  return m == MethodId::Sum || m == MethodId::Max || m == MethodId::NN || m == MethodId::TF;
}
inline bool is_alignment(MethodId m) {
  return m == MethodId::Dis || m == MethodId::Sim || m == MethodId::Dcca;
}
inline bool needs_fusion(MethodId m) { return is_fusion(m) || m == MethodId::Pprd; }

struct MethodConfig {
  MethodId method = MethodId::Dae;
  std::vector<MlpSpec> encoders;  // one per view
  std::vector<MlpSpec> decoders;  // one per view
  std::optional<FusionSpec> fusion;
  std::optional<AlignSpec> align;
  double lr = 1e-3;
  double l2 = 1e-4;
  int epochs = 200;
  int pretrain_epochs = 50;  // DSV autoencoder pretraining
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  std::size_t num_views() const noexcept { return encoders.size(); }
  std::size_t embed_dim() const { return encoders.front().output_width(); }

  std::vector<std::size_t> view_dims() const {
    std::vector<std::size_t> d;
    for (const MlpSpec& e : encoders) d.push_back(e.input_width());
    return d;
  }

  void validate() const {
    const std::string name(to_string(method));
    const bool single_ok = method == MethodId::Dae || method == MethodId::Dsv;
    if (encoders.empty() || (encoders.size() < 2 && !single_ok)) {
      throw ConfigError(name + " needs at least 2 views");
    }
    if (method != MethodId::Dsv && decoders.size() != encoders.size()) {
      throw ConfigError(name + ": one decoder per view is required");
    }
    for (const MlpSpec& e : encoders) e.validate();
    for (const MlpSpec& d : decoders) d.validate();
    const std::size_t d_embed = embed_dim();
    for (std::size_t v = 0; v < encoders.size(); ++v) {
      if (encoders[v].output_width() != d_embed) {
        throw ConfigError(name + ": all encoders must emit the same embedding width");
      }
      if (v < decoders.size() && decoders[v].output_width() != encoders[v].input_width()) {
        throw ConfigError(name + ": decoder " + std::to_string(v) +
                          " must reconstruct the view width");
      }
    }
    const std::size_t dec_in = is_fusion(method) && fusion ? fusion->out_dim : d_embed;
    for (const MlpSpec& d : decoders) {
      if (d.input_width() != dec_in) {
        throw ConfigError(name + ": decoder input width must be " + std::to_string(dec_in));
      }
    }
    if (needs_fusion(method) != fusion.has_value()) {
      throw ConfigError(name + (fusion ? " takes no fusion settings" : " requires fusion settings"));
    }
    if (is_alignment(method) != align.has_value()) {
      throw ConfigError(name + (align ? " takes no alignment settings" : " requires alignment settings"));
    }
    if (fusion) {
      if (is_fusion(method) && to_string(fusion->kind) != name) {
        throw ConfigError(name + ": fusion kind " + std::string(to_string(fusion->kind)) +
                          " does not match the method");
      }
      if (method == MethodId::Pprd && fusion->kind != FusionKind::Sum &&
          fusion->kind != FusionKind::Max) {
        throw ConfigError("PPRD inner fusion must be SUM or MAX");
      }
      if ((fusion->kind == FusionKind::Sum || fusion->kind == FusionKind::Max) &&
          fusion->out_dim != d_embed) {
        throw ConfigError(name + ": SUM/MAX fusion width must equal the embedding width");
      }
      if (fusion->kind == FusionKind::TF && fusion->rank == 0) {
        throw ConfigError("TF rank must be at least 1");
      }
    }
    if (align) {
      align->validate();
      if (to_string(align->kind) != name) {
        throw ConfigError(name + ": alignment kind does not match the method");
      }
    }
    if (method == MethodId::Dsv) {
      for (const MlpSpec& e : encoders)
        if (e.use_bias) throw ConfigError("DSV encoders must not have bias terms");
    }
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("l2 weight must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  }
};

/// Default configuration: per-view encoder [d, max(64, d/2), D] with tanh
/// hidden units and a mirrored linear-output decoder, D = 32, R = 16,
/// α = 0.1, m = 1, r = 1e-4.
inline MethodConfig default_config(MethodId method, std::span<const std::size_t> view_dims,
                                   std::size_t embed_dim = 32) {
  MethodConfig c;
  c.method = method;
  const bool bias = method != MethodId::Dsv;
  for (std::size_t d : view_dims) {
    MlpSpec enc = default_encoder(d, embed_dim, bias);
    c.encoders.push_back(enc);
    MlpSpec dec = enc.mirrored();
    dec.use_bias = true;
    c.decoders.push_back(dec);
  }
  if (needs_fusion(method)) {
    FusionSpec f;
    f.kind = method == MethodId::Max  ? FusionKind::Max
             : method == MethodId::NN ? FusionKind::NN
             : method == MethodId::TF ? FusionKind::TF
                                      : FusionKind::Sum;
    f.out_dim = embed_dim;
    c.fusion = f;
  }
  if (is_alignment(method)) {
    AlignSpec a;
    a.kind = method == MethodId::Dis ? AlignKind::Dis
             : method == MethodId::Sim ? AlignKind::Sim
                                       : AlignKind::Dcca;
    c.align = a;
  }
  return c;
}

/// Per-epoch training record.
struct TrainStats {
  std::vector<double> epoch_losses;     // main objective, mean per datum
  std::vector<double> pretrain_losses;  // DSV autoencoder phase
  /// Prediction methods: rounds in which view v was the target / the input.
  std::vector<std::size_t> target_rounds;
  std::vector<std::size_t> input_rounds;
  std::size_t batches = 0;
  double center_loss_at_init = 0.0;  // DSV: mean squared distance before the center phase
  std::vector<std::string> warnings;
};

struct Model {
  MethodConfig config;
  std::vector<Params> encoders;
  std::vector<Params> decoders;
  FusionParams fusion;
  std::vector<Tensor> centers;  // DSV
  NormStats norm;               // filled by the pipeline, optional
  TrainStats stats;

  MethodId method() const noexcept { return config.method; }
};

// ---------------------------------------------------------------------------

/// c = column mean of the embeddings; entries with |c_i| < 0.1 are pushed to
/// ±0.1 (sign kept, +0.1 for an exact zero).
inline Tensor dsvdd_init_center(const Tensor& embeddings) {
  require_matrix(embeddings, "dsvdd_init_center");
  Tensor c({embeddings.cols()});
  for (std::size_t r = 0; r < embeddings.rows(); ++r)
    for (std::size_t j = 0; j < embeddings.cols(); ++j) c[j] += embeddings(r, j);
  for (double& v : c.data()) {
    v /= static_cast<double>(embeddings.rows());
    if (std::abs(v) < 0.1) v = v < 0.0 ? -0.1 : 0.1;
  }
  return c;
}

/// Splits a permutation into ceil(N / batch) near-equal batches.
inline std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                          std::size_t batch_size) {
  const std::size_t n = order.size();
  const std::size_t count = std::max<std::size_t>(1, (n + batch_size - 1) / batch_size);
  std::vector<std::vector<std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t len = n / count + (b < n % count ? 1 : 0);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(start + len));
    start += len;
  }
  return out;
}

namespace detail {

/// Σ_rows ‖a - b‖² / rows
inline Var batch_sq_error(Var a, Var b) {
  const double n = static_cast<double>(a.graph->shape(a)[0]);
  return scale(sum_squares(sub(a, b)), 1.0 / n);
}

inline Var sum_all(std::vector<Var> terms) {
  return terms.size() == 1 ? terms.front() : add_n(terms);
}

/// Normalizer applied to the alignment measure during training so that the
/// alignment term is a per-datum (DIS) or per-pair (SIM) average like L_r.
inline double alignment_normalizer(AlignKind k, std::size_t batch) {
  const double n = static_cast<double>(batch);
  switch (k) {
    case AlignKind::Dis: return n;
    case AlignKind::Sim: return n * (n - 1.0);
    case AlignKind::Dcca: return 1.0;
  }
  return 1.0;
}

struct BoundModel {
  std::vector<BoundMlp> enc;
  std::vector<BoundMlp> dec;
  BoundFusion fusion;
};

inline BoundModel bind_all(ParamBinder& pb, Model& m) {
  BoundModel b;
  const MethodConfig& c = m.config;
  for (std::size_t v = 0; v < m.encoders.size(); ++v)
    b.enc.push_back(bind_mlp(pb, c.encoders[v], m.encoders[v]));
  for (std::size_t v = 0; v < m.decoders.size(); ++v)
    b.dec.push_back(bind_mlp(pb, c.decoders[v], m.decoders[v]));
  if (c.fusion && is_fusion(c.method)) {
    const std::vector<std::size_t> dims(c.num_views(), c.embed_dim());
    b.fusion = bind_fusion(pb, *c.fusion, dims, m.fusion);
  } else if (c.fusion) {
    b.fusion.spec = *c.fusion;
  }
  return b;
}

inline BoundModel bind_all(Graph& g, const Model& m) {
  BoundModel b;
  const MethodConfig& c = m.config;
  for (std::size_t v = 0; v < m.encoders.size(); ++v)
    b.enc.push_back(bind_mlp(g, c.encoders[v], m.encoders[v]));
  for (std::size_t v = 0; v < m.decoders.size(); ++v)
    b.dec.push_back(bind_mlp(g, c.decoders[v], m.decoders[v]));
  if (c.fusion && is_fusion(c.method)) {
    const std::vector<std::size_t> dims(c.num_views(), c.embed_dim());
    b.fusion = bind_fusion(g, *c.fusion, dims, m.fusion);
  } else if (c.fusion) {
    b.fusion.spec = *c.fusion;
  }
  return b;
}

/// Joint embedding of the views in `inputs` for the prediction methods; a
/// single input passes through unchanged.
inline Var fuse_subset(const BoundFusion& f, std::span<const Var> h) {
  if (h.size() == 1) return h.front();
  return f.spec.kind == FusionKind::Max ? max_n(h) : fuse_sum(h);
}

/// Records one batch's objective on `g` and returns the scalar loss.
/// `phase` selects the DSV stage: 0 = autoencoder pretraining, 1 = center.
inline Var build_loss(const Model& m, const BoundModel& b, std::span<const Var> x,
                      std::span<const Var> centers, int phase, TrainStats* stats,
                      const std::shared_ptr<AlignDiagnostics>& diag) {
  const MethodConfig& c = m.config;
  const std::size_t V = x.size();
  std::vector<Var> h;
  for (std::size_t v = 0; v < V; ++v) h.push_back(b.enc[v](x[v]));
  std::vector<Var> terms;
  switch (c.method) {
    case MethodId::Sum:
    case MethodId::Max:
    case MethodId::NN:
    case MethodId::TF: {
      Var joint = fuse(b.fusion, h);
      for (std::size_t v = 0; v < V; ++v) terms.push_back(batch_sq_error(b.dec[v](joint), x[v]));
      return sum_all(terms);
    }
    case MethodId::Dis:
    case MethodId::Sim:
    case MethodId::Dcca: {
      for (std::size_t v = 0; v < V; ++v) terms.push_back(batch_sq_error(b.dec[v](h[v]), x[v]));
      AlignmentTerm a = alignment_measure(*c.align, h, diag);
      const double norm = alignment_normalizer(c.align->kind, x[0].graph->shape(x[0])[0]);
      return combined_loss(*c.align, sum_all(terms), scale(a.measure, 1.0 / norm));
    }
    case MethodId::Dae:
      for (std::size_t v = 0; v < V; ++v) terms.push_back(batch_sq_error(b.dec[v](h[v]), x[v]));
      return sum_all(terms);
    case MethodId::Dsv:
      if (phase == 0) {
        for (std::size_t v = 0; v < V; ++v) terms.push_back(batch_sq_error(b.dec[v](h[v]), x[v]));
      } else {
        for (std::size_t v = 0; v < V; ++v) {
          const double n = static_cast<double>(h[v].graph->shape(h[v])[0]);
          terms.push_back(scale(sum_squares(add_bias(h[v], centers[v])), 1.0 / n));
        }
      }
      return sum_all(terms);
    case MethodId::Pprd:
      for (std::size_t target = 0; target < V; ++target) {
        std::vector<Var> rest;
        for (std::size_t u = 0; u < V; ++u)
          if (u != target) rest.push_back(h[u]);
        Var joint = fuse_subset(b.fusion, rest);
        terms.push_back(batch_sq_error(b.dec[target](joint), x[target]));
        if (stats) {
          ++stats->target_rounds[target];
          for (std::size_t u = 0; u < V; ++u)
            if (u != target) ++stats->input_rounds[u];
        }
      }
      return sum_all(terms);
    case MethodId::Sprd:
      for (std::size_t source = 0; source < V; ++source) {
        for (std::size_t u = 0; u < V; ++u) {
          terms.push_back(batch_sq_error(b.dec[u](h[source]), x[u]));
          if (stats) ++stats->target_rounds[u];
        }
        if (stats) ++stats->input_rounds[source];
      }
      return sum_all(terms);
  }
  throw ConfigError("unknown method");
}

inline void check_views(const MethodConfig& c, std::span<const Tensor> views, const char* what) {
  if (views.size() != c.num_views()) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(c.num_views()) +
                     " views, got " + std::to_string(views.size()));
  }
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].rank() != 2 || views[v].empty()) {
      throw DataError(std::string(what) + ": view " + std::to_string(v) + " is empty");
    }
    if (views[v].cols() != c.encoders[v].input_width()) {
      throw ShapeError(std::string(what) + ": view " + std::to_string(v) + " has " +
                       std::to_string(views[v].cols()) + " features, model expects " +
                       std::to_string(c.encoders[v].input_width()));
    }
    if (views[v].rows() != views.front().rows()) {
      throw DataError(std::string(what) + ": views are not row-aligned");
    }
  }
}

/// Runs `epochs` passes of minibatch Adam over the objective for `phase`.
/// `trainable` selects which parameter groups the optimizer updates.
inline void run_epochs(Model& m, std::span<const Tensor> views, int epochs, int phase,
                       Rng& rng, std::vector<double>& losses) {
  const MethodConfig& c = m.config;
  const std::size_t n = views.front().rows();
  Adam adam({c.lr, c.l2});
  auto diag = std::make_shared<AlignDiagnostics>();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(n);
    double total = 0.0;
    for (const auto& rows : make_batches(order, c.batch_size)) {
      Graph g;
      ParamBinder pb(g);
      BoundModel b;
      if (phase == 1) {
        for (std::size_t v = 0; v < m.encoders.size(); ++v)
          b.enc.push_back(bind_mlp(pb, c.encoders[v], m.encoders[v]));
      } else {
        b = bind_all(pb, m);
      }
      std::vector<Var> x, centers;
      for (const Tensor& view : views) x.push_back(g.leaf(take_rows(view, rows)));
      for (const Tensor& ctr : m.centers) centers.push_back(g.leaf(-1.0 * ctr));
      Var loss = build_loss(m, b, x, centers, phase, &m.stats, diag);
      const Gradients grads = g.backward(loss);
      const double value = g.value(loss).item();
      if (!std::isfinite(value)) {
        throw DivergenceError(std::string(to_string(c.method)) + ": loss became " +
                                  std::to_string(value) + " in epoch " + std::to_string(epoch),
                              epoch);
      }
      total += value * static_cast<double>(rows.size());
      adam.step(pb.tensors(), pb.gradients(grads));
      ++m.stats.batches;
    }
    losses.push_back(total / static_cast<double>(n));
  }
  if (!diag->warnings.empty()) {
    m.stats.warnings.push_back(diag->warnings.front() + " (" +
                               std::to_string(diag->warnings.size()) + " batches)");
  }
}

inline Tensor embed(const Params& p, const MlpSpec& spec, const Tensor& x) {
  return mlp_apply(p, spec, x);
}

}  // namespace detail

/// DSV objective without regularization: Σ_v mean_n ‖φ_v(x_n) - c_v‖².
inline double center_loss(const Model& m, std::span<const Tensor> views) {
  double total = 0.0;
  for (std::size_t v = 0; v < m.centers.size(); ++v) {
    const Tensor h = mlp_apply(m.encoders[v], m.config.encoders[v], views[v]);
    double s = 0.0;
    for (std::size_t r = 0; r < h.rows(); ++r)
      for (std::size_t j = 0; j < h.cols(); ++j) s += (h(r, j) - m.centers[v][j]) * (h(r, j) - m.centers[v][j]);
    total += s / static_cast<double>(h.rows());
  }
  return total;
}

/// Freshly initialized (untrained) parameters for `config`.
inline Model init_model(const MethodConfig& config, Rng& rng) {
  config.validate();
  Model m;
  m.config = config;
  for (const MlpSpec& e : config.encoders) m.encoders.push_back(init_mlp(e, rng));
  for (const MlpSpec& d : config.decoders) m.decoders.push_back(init_mlp(d, rng));
  if (config.fusion && is_fusion(config.method)) {
    const std::vector<std::size_t> dims(config.num_views(), config.embed_dim());
    m.fusion = init_fusion(*config.fusion, dims, rng);
  }
  m.stats.target_rounds.assign(config.num_views(), 0);
  m.stats.input_rounds.assign(config.num_views(), 0);
  return m;
}

/// Trains the configured method on row-aligned training views.
inline Model train(const MethodConfig& config, std::span<const Tensor> train_views) {
  config.validate();
  detail::check_views(config, train_views, "train");
  Rng rng(config.seed);
  Model m = init_model(config, rng);

  if (config.method == MethodId::Dsv) {
    if (config.pretrain_epochs > 0) {
      if (m.decoders.empty()) {
        throw ConfigError("DSV pretraining requires decoders");
      }
      detail::run_epochs(m, train_views, config.pretrain_epochs, 0, rng, m.stats.pretrain_losses);
    }
    for (std::size_t v = 0; v < config.num_views(); ++v) {
      m.centers.push_back(
          dsvdd_init_center(detail::embed(m.encoders[v], config.encoders[v], train_views[v])));
    }
    m.stats.center_loss_at_init = center_loss(m, train_views);
    detail::run_epochs(m, train_views, config.epochs, 1, rng, m.stats.epoch_losses);
  } else {
    detail::run_epochs(m, train_views, config.epochs, 0, rng, m.stats.epoch_losses);
  }
  return m;
}

/// Per-view anomaly scores [N x V] for already-normalized test views.
inline Tensor score(const Model& m, std::span<const Tensor> test_views) {
  const MethodConfig& c = m.config;
  detail::check_views(c, test_views, "score");
  const std::size_t V = c.num_views();
  const std::size_t n = test_views.front().rows();
  Graph g;
  const detail::BoundModel b = detail::bind_all(g, m);
  std::vector<Var> x, h;
  for (const Tensor& t : test_views) x.push_back(g.leaf(t));
  for (std::size_t v = 0; v < V; ++v) h.push_back(b.enc[v](x[v]));

  Tensor out({n, V});
  auto put = [&](std::size_t v, Var err, double dim, double weight = 1.0) {
    const Tensor& e = g.forward_eval(row_sum_squares(err));
    for (std::size_t r = 0; r < n; ++r) out(r, v) += weight * e[r] / dim;
  };
  auto dim = [&](std::size_t v) { return static_cast<double>(c.encoders[v].input_width()); };

  switch (c.method) {
    case MethodId::Sum:
    case MethodId::Max:
    case MethodId::NN:
    case MethodId::TF: {
      Var joint = fuse(b.fusion, h);
      for (std::size_t v = 0; v < V; ++v) put(v, sub(b.dec[v](joint), x[v]), dim(v));
      break;
    }
    case MethodId::Dis:
    case MethodId::Sim:
    case MethodId::Dcca:
    case MethodId::Dae:
      for (std::size_t v = 0; v < V; ++v) put(v, sub(b.dec[v](h[v]), x[v]), dim(v));
      break;
    case MethodId::Dsv:
      for (std::size_t v = 0; v < V; ++v) {
        Var ctr = g.leaf(-1.0 * m.centers[v]);
        put(v, add_bias(h[v], ctr), static_cast<double>(c.embed_dim()));
      }
      break;
    case MethodId::Pprd:
      for (std::size_t target = 0; target < V; ++target) {
        std::vector<Var> rest;
        for (std::size_t u = 0; u < V; ++u)
          if (u != target) rest.push_back(h[u]);
        Var joint = detail::fuse_subset(b.fusion, rest);
        put(target, sub(b.dec[target](joint), x[target]), dim(target));
      }
      break;
    case MethodId::Sprd:
      for (std::size_t source = 0; source < V; ++source)
        for (std::size_t u = 0; u < V; ++u)
          put(source, sub(b.dec[u](h[source]), x[u]), dim(u), 1.0 / static_cast<double>(V));
      break;
  }
  return out;
}

}  // namespace mvocc
