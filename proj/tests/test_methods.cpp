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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "mvocc/methods.hpp"
#include "mvocc/model_io.hpp"
#include "test_util.hpp"

namespace mvocc {
namespace {

using testing::random_tensor;

/// Tiny per-view networks [d, 5, D] so tests stay fast.
MethodConfig small_config(MethodId m, std::vector<std::size_t> dims, std::size_t D = 3) {
  MethodConfig c = default_config(m, dims, D);
  for (std::size_t v = 0; v < dims.size(); ++v) {
    c.encoders[v].widths = {dims[v], 5, D};
    c.decoders[v] = c.encoders[v].mirrored();
    c.decoders[v].use_bias = true;
  }
  if (c.fusion) c.fusion->rank = 2;
  c.epochs = 5;
  c.pretrain_epochs = 3;
  c.batch_size = 8;
  return c;
}

std::vector<Tensor> random_views(std::vector<std::size_t> dims, std::size_t n, Rng& rng) {
  std::vector<Tensor> out;
  for (std::size_t d : dims) out.push_back(random_tensor({n, d}, rng));
  return out;
}

TEST(MethodId, ParseRoundTrip) {
  for (MethodId m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("LSTM"), ConfigError);
  EXPECT_THROW(parse_method("dae"), ConfigError);
}

TEST(MethodConfig, DefaultsCarryExactlyTheRequiredSubSpec) {
  const std::vector<std::size_t> dims{20, 30};
  for (MethodId m : kAllMethods) {
    const MethodConfig c = default_config(m, dims);
    EXPECT_NO_THROW(c.validate()) << to_string(m);
    EXPECT_EQ(c.fusion.has_value(), is_fusion(m) || m == MethodId::Pprd) << to_string(m);
    EXPECT_EQ(c.align.has_value(), is_alignment(m)) << to_string(m);
    EXPECT_EQ(c.encoders[0].widths, (std::vector<std::size_t>{20, 64, 32}));
    EXPECT_EQ(c.decoders[1].widths, (std::vector<std::size_t>{32, 64, 30}));
  }
  EXPECT_EQ(default_config(MethodId::TF, dims).fusion->rank, 16u);
  EXPECT_EQ(default_config(MethodId::Pprd, dims).fusion->kind, FusionKind::Sum);
  EXPECT_DOUBLE_EQ(default_config(MethodId::Sim, dims).align->margin, 1.0);
  EXPECT_DOUBLE_EQ(default_config(MethodId::Dis, dims).align->alpha, 0.1);
}

TEST(MethodConfig, MissingOrExtraSubSpecIsConfigError) {
  const std::vector<std::size_t> dims{4, 5};
  MethodConfig c = small_config(MethodId::TF, dims);
  c.fusion.reset();
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(MethodId::Dae, dims);
  c.align = AlignSpec{};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(MethodId::Sum, dims);
  c.fusion->kind = FusionKind::Max;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(MethodId::Pprd, dims);
  c.fusion->kind = FusionKind::TF;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(MethodId::Dsv, dims);
  c.encoders[0].use_bias = true;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(MethodConfig, SingleViewOnlyForPerViewMethods) {
  const std::vector<std::size_t> dims{4};
  EXPECT_NO_THROW(small_config(MethodId::Dae, dims).validate());
  EXPECT_NO_THROW(small_config(MethodId::Dsv, dims).validate());
  MethodConfig c = small_config(MethodId::Sprd, {4, 4});
  c.encoders.resize(1);
  c.decoders.resize(1);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DsvddInitCenter, ColumnMean) {
  const Tensor c = dsvdd_init_center(Tensor::matrix({{1, 1}, {3, 3}}));
  EXPECT_EQ(c, Tensor::vector({2, 2}));
}

TEST(DsvddInitCenter, SmallEntriesForcedAwayFromZero) {
  const Tensor c = dsvdd_init_center(Tensor::matrix({{1, -0.1, 0.5}, {-1, 0.0, -0.3}}));
  EXPECT_DOUBLE_EQ(c[0], 0.1);   // exact zero -> +0.1
  EXPECT_DOUBLE_EQ(c[1], -0.1);  // -0.05 -> -0.1
  EXPECT_DOUBLE_EQ(c[2], 0.1);   // 0.1 stays
}

TEST(MakeBatches, NearEqualSizesCoverEveryRow) {
  std::vector<std::size_t> order(10);
  for (std::size_t i = 0; i < 10; ++i) order[i] = i;
  const auto b = make_batches(order, 4);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 4u);
  EXPECT_EQ(b[1].size(), 3u);
  EXPECT_EQ(b[2].size(), 3u);
  EXPECT_EQ(make_batches(order, 128).size(), 1u);  // batch shrinks to N
}

// Every training objective against central differences.
TEST(MethodGradients, AllLossesMatchFiniteDifferences) {
  Rng rng(31);
  for (MethodId m : kAllMethods) {
    for (int trial = 0; trial < 3; ++trial) {
      const std::vector<std::size_t> dims{3, 4};
      MethodConfig c = small_config(m, dims);
      Rng init(rng.next_u64());
      Model model = init_model(c, init);
      const auto views = random_views(dims, 6, rng);
      const auto res = testing::check_model_gradients(model, views);
      EXPECT_LT(res.max_rel_error, 1e-4) << to_string(m) << " trial " << trial;
      if (m == MethodId::Dsv) {
        for (std::size_t v = 0; v < 2; ++v)
          model.centers.push_back(dsvdd_init_center(mlp_apply(model.encoders[v], c.encoders[v], views[v])));
        const auto r1 = testing::check_model_gradients(model, views, 1);
        EXPECT_LT(r1.max_rel_error, 1e-4) << "DSV center objective";
      }
    }
  }
}

TEST(Train, SameSeedIsBitIdentical) {
  Rng rng(1);
  const auto views = random_views({3, 4}, 20, rng);
  for (MethodId m : {MethodId::TF, MethodId::Dcca, MethodId::Dsv, MethodId::Pprd}) {
    MethodConfig c = small_config(m, {3, 4});
    c.seed = 99;
    const Model a = train(c, views), b = train(c, views);
    EXPECT_EQ(a.encoders, b.encoders) << to_string(m);
    EXPECT_EQ(a.decoders, b.decoders) << to_string(m);
    EXPECT_EQ(a.fusion.factors, b.fusion.factors);
    EXPECT_EQ(a.centers, b.centers);
    c.seed = 100;
    EXPECT_NE(train(c, views).encoders, a.encoders);
  }
}

TEST(Train, ConstantDatasetIsLearnedByEveryMethod) {
  Rng rng(5);
  const std::vector<std::size_t> dims{3, 4};
  std::vector<Tensor> views;
  for (std::size_t d : dims) {
    const Tensor row = random_tensor({1, d}, rng, -0.8, 0.8);
    Tensor v({32, d});
    for (std::size_t r = 0; r < 32; ++r)
      for (std::size_t j = 0; j < d; ++j) v(r, j) = row(0, j);
    views.push_back(v);
  }
  for (MethodId m : kAllMethods) {
    MethodConfig c = small_config(m, dims);
    c.lr = 1e-2;
    c.l2 = 0.0;
    c.epochs = 400;
    c.pretrain_epochs = 200;
    c.batch_size = 32;
    const Model model = train(c, views);
    const Tensor s = score(model, views);
    for (double v : s.data()) EXPECT_LT(v, 1e-3) << to_string(m);
    if (!is_alignment(m)) EXPECT_LT(model.stats.epoch_losses.back(), 1e-3) << to_string(m);
  }
}

TEST(Train, DsvReducesDistanceToCenter) {
  Rng rng(6);
  const auto views = random_views({5, 6}, 64, rng);
  MethodConfig c = small_config(MethodId::Dsv, {5, 6});
  c.epochs = 50;
  c.l2 = 1e-5;
  const Model m = train(c, views);
  EXPECT_LT(center_loss(m, views), m.stats.center_loss_at_init);
  for (const Params& p : m.encoders) EXPECT_TRUE(p.biases.empty());
  EXPECT_EQ(m.centers.size(), 2u);
}

TEST(Train, PredictionRoundsUseEachViewOncePerBatch) {
  Rng rng(7);
  const auto views = random_views({3, 4}, 20, rng);
  for (MethodId m : {MethodId::Pprd, MethodId::Sprd}) {
    const Model model = train(small_config(m, {3, 4}), views);
    const std::size_t batches = model.stats.batches;
    ASSERT_GT(batches, 0u);
    if (m == MethodId::Pprd) {
      EXPECT_EQ(model.stats.target_rounds, (std::vector<std::size_t>{batches, batches}));
      EXPECT_EQ(model.stats.input_rounds, (std::vector<std::size_t>{batches, batches}));
    } else {
      // each view is the input once; every view is decoded in both rounds
      EXPECT_EQ(model.stats.input_rounds, (std::vector<std::size_t>{batches, batches}));
      EXPECT_EQ(model.stats.target_rounds, (std::vector<std::size_t>{2 * batches, 2 * batches}));
    }
  }
}

TEST(Train, NanInputIsDivergence) {
  Rng rng(8);
  auto views = random_views({3, 4}, 10, rng);
  views[0](3, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    train(small_config(MethodId::Dae, {3, 4}), views);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0);
  }
}

TEST(Train, EmptyViewIsDataError) {
  Rng rng(8);
  std::vector<Tensor> views{random_tensor({5, 3}, rng), Tensor()};
  EXPECT_THROW(train(small_config(MethodId::Dae, {3, 4}), views), DataError);
}

TEST(Train, LossDecreasesOnSyntheticBenchmark) {
  SynthSpec s;
  s.n_positive = 200;
  s.n_negative = 10;
  const MultiViewDataset ds = synth_generate(s);
  Rng rng(2);
  const OccSplit sp = one_vs_all_split(ds, 0, 0.7, rng);
  const auto tr = normalize_apply(normalize_fit(sp.train), sp.train);
  for (MethodId m : kAllMethods) {
    MethodConfig c = default_config(m, ds.view_dims(), 8);
    c.epochs = 30;
    c.pretrain_epochs = 10;
    const Model model = train(c, tr);
    const auto& l = model.stats.epoch_losses;
    double tail = 0.0;
    for (std::size_t i = l.size() - 10; i < l.size(); ++i) tail += l[i] / 10.0;
    EXPECT_LE(tail, l.front()) << to_string(m);
  }
}

// ---------------------------------------------------------------------------
// Scoring

/// DAE whose decoders ignore their input and emit `target` rows.
Model constant_output_dae(const std::vector<Tensor>& target) {
  std::vector<std::size_t> dims;
  for (const Tensor& t : target) dims.push_back(t.cols());
  MethodConfig c = small_config(MethodId::Dae, dims);
  Rng rng(0);
  Model m = init_model(c, rng);
  for (std::size_t v = 0; v < dims.size(); ++v) {
    for (Tensor& w : m.decoders[v].weights) w = Tensor::zeros(w.shape());
    m.decoders[v].biases.back() = target[v];
  }
  return m;
}

TEST(Score, PerfectReconstructionScoresZero) {
  const Tensor b0 = Tensor::vector({0.1, 0.2, 0.3}), b1 = Tensor::vector({1, 2, 3, 4});
  const Model m = constant_output_dae({b0, b1});
  Tensor x0({4, 3}), x1({4, 4});
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t j = 0; j < 3; ++j) x0(r, j) = b0[j];
    for (std::size_t j = 0; j < 4; ++j) x1(r, j) = b1[j];
  }
  const Tensor s = score(m, std::vector<Tensor>{x0, x1});
  for (double v : s.data()) EXPECT_EQ(v, 0.0);
}

TEST(Score, NormalizedByViewDimension) {
  // d_v = 4, raw squared error 2.0 -> 0.5
  const Model m = constant_output_dae({Tensor::vector({0, 0, 0}), Tensor::vector({0, 0, 0, 0})});
  const Tensor x0 = Tensor::matrix({{0, 0, 0}});
  const Tensor x1 = Tensor::matrix({{1, 1, 0, 0}});
  const Tensor s = score(m, std::vector<Tensor>{x0, x1});
  EXPECT_DOUBLE_EQ(s(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(s(0, 0), 0.0);
}

double sq_err(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

TEST(Score, SprdHandTrace) {
  Rng rng(10);
  const MethodConfig c = small_config(MethodId::Sprd, {3, 4});
  const Model m = init_model(c, rng);
  const std::vector<Tensor> x{random_tensor({1, 3}, rng), random_tensor({1, 4}, rng)};
  const Tensor s = score(m, x);
  for (std::size_t src = 0; src < 2; ++src) {
    const Tensor h = mlp_apply(m.encoders[src], c.encoders[src], x[src]);
    const double e0 = sq_err(mlp_apply(m.decoders[0], c.decoders[0], h), x[0]) / 3.0;
    const double e1 = sq_err(mlp_apply(m.decoders[1], c.decoders[1], h), x[1]) / 4.0;
    EXPECT_NEAR(s(0, src), 0.5 * (e0 + e1), 1e-14);
  }
}

TEST(Score, PprdHandTrace) {
  Rng rng(11);
  const MethodConfig c = small_config(MethodId::Pprd, {3, 4, 2});
  const Model m = init_model(c, rng);
  const std::vector<Tensor> x{random_tensor({2, 3}, rng), random_tensor({2, 4}, rng),
                              random_tensor({2, 2}, rng)};
  const Tensor s = score(m, x);
  std::vector<Tensor> h;
  for (std::size_t v = 0; v < 3; ++v) h.push_back(mlp_apply(m.encoders[v], c.encoders[v], x[v]));
  const std::size_t d[] = {3, 4, 2};
  for (std::size_t t = 0; t < 3; ++t) {
    Tensor joint = Tensor::zeros(h[0].shape());
    for (std::size_t u = 0; u < 3; ++u)
      if (u != t) joint = joint + 0.5 * h[u];
    const Tensor pred = mlp_apply(m.decoders[t], c.decoders[t], joint);
    for (std::size_t r = 0; r < 2; ++r) {
      double e = 0.0;
      for (std::size_t j = 0; j < d[t]; ++j) e += (pred(r, j) - x[t](r, j)) * (pred(r, j) - x[t](r, j));
      EXPECT_NEAR(s(r, t), e / static_cast<double>(d[t]), 1e-14);
    }
  }
}

TEST(Score, DsvIsDistanceOverEmbeddingWidth) {
  Rng rng(12);
  MethodConfig c = small_config(MethodId::Dsv, {3, 4}, 2);
  Model m = init_model(c, rng);
  const std::vector<Tensor> x{random_tensor({3, 3}, rng), random_tensor({3, 4}, rng)};
  m.centers = {Tensor::vector({0.5, -0.5}), Tensor::vector({0.2, 0.1})};
  const Tensor s = score(m, x);
  for (std::size_t v = 0; v < 2; ++v) {
    const Tensor h = mlp_apply(m.encoders[v], c.encoders[v], x[v]);
    for (std::size_t r = 0; r < 3; ++r) {
      const double e = std::pow(h(r, 0) - m.centers[v][0], 2) + std::pow(h(r, 1) - m.centers[v][1], 2);
      EXPECT_NEAR(s(r, v), e / 2.0, 1e-14);
    }
  }
}

TEST(Score, NonNegativeAndFiniteForAllMethods) {
  Rng rng(13);
  const auto views = random_views({3, 4}, 16, rng);
  const auto test = random_views({3, 4}, 9, rng);
  for (MethodId m : kAllMethods) {
    const Tensor s = score(train(small_config(m, {3, 4}), views), test);
    EXPECT_EQ(s.shape(), (Shape{9, 2}));
    for (double v : s.data()) {
      EXPECT_TRUE(std::isfinite(v)) << to_string(m);
      EXPECT_GE(v, 0.0) << to_string(m);
    }
  }
}

TEST(Score, DimensionMismatchIsShapeError) {
  Rng rng(14);
  const Model m = init_model(small_config(MethodId::Dae, {3, 4}), rng);
  EXPECT_THROW(score(m, random_views({3, 5}, 2, rng)), ShapeError);
  EXPECT_THROW(score(m, random_views({3}, 2, rng)), ShapeError);
}

// ---------------------------------------------------------------------------
// Serialization

TEST(ModelIo, RoundTripPreservesParametersAndScores) {
  Rng rng(15);
  const auto views = random_views({3, 4}, 12, rng);
  const auto dir = std::filesystem::temp_directory_path() / "mvocc_test_model_io";
  std::filesystem::create_directories(dir);
  for (MethodId m : kAllMethods) {
    Model model = train(small_config(m, {3, 4}), views);
    model.norm = normalize_fit(views);
    const auto path = dir / (std::string(to_string(m)) + ".mvoc");
    save_model(model, path);
    const Model back = load_model(path);
    EXPECT_EQ(back.method(), m);
    EXPECT_EQ(back.encoders, model.encoders);
    EXPECT_EQ(back.decoders, model.decoders);
    EXPECT_EQ(back.fusion.factors, model.fusion.factors);
    EXPECT_EQ(back.centers, model.centers);
    EXPECT_EQ(back.norm.min, model.norm.min);
    EXPECT_EQ(score(back, views), score(model, views)) << to_string(m);
  }
  std::filesystem::remove_all(dir);
}

TEST(ModelIo, RejectsForeignFiles) {
  const auto path = std::filesystem::temp_directory_path() / "mvocc_not_a_model.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE and some bytes";
  }
  EXPECT_THROW(load_model(path), DataError);
  std::filesystem::remove(path);
}

TEST(ModelIo, ConfigJsonRoundTrip) {
  for (MethodId m : kAllMethods) {
    MethodConfig c = small_config(m, {3, 4});
    c.seed = 0xFFFFFFFFFFFFFFF1ULL;
    const MethodConfig back = config_from_json(json::parse(config_to_json(c).dump()));
    EXPECT_EQ(config_to_json(back), config_to_json(c)) << to_string(m);
  }
}

TEST(ModelIo, OverridesRebuildArchitecture) {
  MethodConfig c = default_config(MethodId::TF, std::vector<std::size_t>{10, 12});
  apply_overrides(c, json::parse(R"({"embed_dim": 8, "hidden_widths": [16, 12], "fusion": {"rank": 4}})"));
  EXPECT_EQ(c.encoders[1].widths, (std::vector<std::size_t>{12, 16, 12, 8}));
  EXPECT_EQ(c.decoders[0].widths, (std::vector<std::size_t>{8, 12, 16, 10}));
  EXPECT_EQ(c.fusion->out_dim, 8u);
  EXPECT_EQ(c.fusion->rank, 4u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(apply_overrides(c, json::parse(R"({"align": {"alpha": 0.5}})")), ConfigError);
  EXPECT_THROW(apply_overrides(c, json::parse(R"({"learning_rate": 0.5})")), ConfigError);
}

}  // namespace
}  // namespace mvocc
