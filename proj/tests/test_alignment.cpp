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

#include "mvocc/alignment.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mvocc {
namespace {

using testing::random_normal;
using testing::random_tensor;
using testing::to_eigen;

/// Two views sharing a latent signal: x = z A + noise, y = z B + noise.
std::pair<Tensor, Tensor> correlated_views(std::size_t n, std::size_t d, Rng& rng) {
  const Tensor z = random_normal({n, d}, rng);
  const Tensor a = random_normal({d, d}, rng), b = random_normal({d, d}, rng);
  Tensor x = matmul(z, a), y = matmul(z, b);
  for (double& v : x.data()) v += 0.7 * rng.normal();
  for (double& v : y.data()) v += 0.7 * rng.normal();
  return {x, y};
}

TEST(Dcca, MatchesClosedFormCca) {
  Rng rng(500);
  const auto [x, y] = correlated_views(500, 4, rng);
  const double ours = dcca_correlation(x, y, 1e-4).corr;
  const double ref = oracle::closed_form_cca(x, y, 1e-4);
  EXPECT_NEAR(ours, ref, 1e-6);
  EXPECT_GT(ours, 0.5);
  EXPECT_LT(ours, 4.0);
}

TEST(Dcca, MatchesClosedFormUnequalWidths) {
  Rng rng(501);
  const Tensor z = random_normal({200, 2}, rng);
  Tensor x = matmul(z, random_normal({2, 3}, rng)), y = matmul(z, random_normal({2, 5}, rng));
  for (double& v : x.data()) v += rng.normal();
  for (double& v : y.data()) v += rng.normal();
  EXPECT_NEAR(dcca_correlation(x, y, 1e-3).corr, oracle::closed_form_cca(x, y, 1e-3), 1e-6);
}

TEST(Dcca, IdenticalViewsGiveFullCorrelation) {
  Rng rng(8);
  const Tensor x = random_normal({300, 3}, rng);
  EXPECT_NEAR(dcca_correlation(x, x, 1e-9).corr, 3.0, 1e-6);
}

TEST(Dcca, IndependentViewsGiveLowCorrelation) {
  Rng rng(9);
  const Tensor x = random_normal({2000, 2}, rng), y = random_normal({2000, 2}, rng);
  EXPECT_LT(dcca_correlation(x, y, 1e-4).corr, 0.15);
}

TEST(Dcca, InvariantToInvertibleLinearMaps) {
  Rng rng(10);
  const auto [x, y] = correlated_views(400, 3, rng);
  const Tensor m = Tensor::matrix({{2, 1, 0}, {0, 1, 0}, {1, 0, 3}});
  Tensor xs = matmul(x, m);
  for (double& v : xs.data()) v += 5.0;  // shift too
  EXPECT_NEAR(dcca_correlation(x, y, 1e-10).corr, dcca_correlation(xs, y, 1e-10).corr, 1e-6);
}

TEST(Dcca, BatchOfOneIsTooSmall) {
  Graph g;
  Var a = g.leaf(Tensor({1, 2})), b = g.leaf(Tensor({1, 2}));
  EXPECT_THROW(dcca_corr(a, b, 1e-4), BatchTooSmallError);
  AlignSpec spec;
  spec.kind = AlignKind::Dcca;
  const Var h[] = {a, b};
  EXPECT_THROW(alignment_measure(spec, h), BatchTooSmallError);
  spec.kind = AlignKind::Sim;
  EXPECT_THROW(alignment_measure(spec, h), BatchTooSmallError);
}

TEST(Dcca, FlagsNearSingularCovariance) {
  Rng rng(4);
  Tensor x = random_normal({50, 3}, rng);
  for (std::size_t r = 0; r < 50; ++r) x(r, 2) = x(r, 0);  // rank deficient
  const Tensor y = random_normal({50, 2}, rng);
  const DccaForward f = dcca_correlation(x, y, 1e-14);
  EXPECT_TRUE(f.ill_conditioned);
  EXPECT_FALSE(dcca_correlation(y, y, 1e-4).ill_conditioned);
}

double measure_value(const AlignSpec& spec, const std::vector<Tensor>& h) {
  Graph g;
  std::vector<Var> v;
  for (const Tensor& t : h) v.push_back(g.leaf(t));
  return g.forward_eval(alignment_measure(spec, v).measure).item();
}

TEST(Dis, NegativeSquaredDistance) {
  AlignSpec spec;
  const Tensor a = Tensor::matrix({{0, 0}, {1, 1}});
  const Tensor b = Tensor::matrix({{3, 4}, {1, 2}});
  EXPECT_DOUBLE_EQ(measure_value(spec, {a, b}), -(25.0 + 1.0));
  spec.p = 1;
  EXPECT_DOUBLE_EQ(measure_value(spec, {a, b}), -(7.0 + 1.0));
}

TEST(Dis, SumsOverAllPairs) {
  AlignSpec spec;
  const Tensor a = Tensor::matrix({{0}}), b = Tensor::matrix({{1}}), c = Tensor::matrix({{3}});
  EXPECT_DOUBLE_EQ(measure_value(spec, {a, b, c}), -(1.0 + 9.0 + 4.0));
}

TEST(Sim, HingeOverMismatchedPairs) {
  // Dot similarity. Row 0: s(a0,b0)=1, s(a0,b1)=0. Row 1: s(a1,b1)=0, s(a1,b0)=2.
  // Terms: max(0, 1-1+0)=0, max(0, 1-0+2)=3.
  AlignSpec spec;
  spec.kind = AlignKind::Sim;
  const Tensor a = Tensor::matrix({{1, 0}, {2, 0}});
  const Tensor b = Tensor::matrix({{1, 0}, {0, 1}});
  EXPECT_DOUBLE_EQ(measure_value(spec, {a, b}), -3.0);
  spec.margin = 0.0;
  EXPECT_DOUBLE_EQ(measure_value(spec, {a, b}), -2.0);
}

TEST(Sim, CosineIgnoresScale) {
  AlignSpec spec;
  spec.kind = AlignKind::Sim;
  spec.similarity = Similarity::Cosine;
  Rng rng(3);
  const Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
  EXPECT_NEAR(measure_value(spec, {a, b}), measure_value(spec, {5.0 * a, b}), 1e-12);
}

TEST(Alignment, SingleViewIsArityError) {
  Graph g;
  Var a = g.leaf(Tensor({2, 2}));
  EXPECT_THROW(alignment_measure(AlignSpec{}, std::span<const Var>(&a, 1)), ArityError);
}

TEST(Alignment, DisAndSimNeedEqualWidths) {
  Graph g;
  const Var h[] = {g.leaf(Tensor({3, 2})), g.leaf(Tensor({3, 3}))};
  EXPECT_THROW(alignment_measure(AlignSpec{}, h), ShapeError);
}

TEST(Alignment, SpecValidation) {
  AlignSpec s;
  s.p = 3;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.r = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.alpha = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(CombinedLoss, ReconstructionMinusAlphaTimesMeasure) {
  Graph g;
  AlignSpec spec;
  spec.alpha = 0.25;
  Var lr = g.leaf(Tensor::scalar(2.0)), a = g.leaf(Tensor::scalar(-4.0));
  EXPECT_DOUBLE_EQ(g.forward_eval(combined_loss(spec, lr, a)).item(), 3.0);
}

TEST(Alignment, GradientsMatchFiniteDifferences) {
  Rng rng(12);
  for (AlignKind kind : {AlignKind::Dis, AlignKind::Sim, AlignKind::Dcca}) {
    for (Similarity sim : {Similarity::Dot, Similarity::Cosine}) {
      if (kind != AlignKind::Sim && sim == Similarity::Cosine) continue;
      AlignSpec spec;
      spec.kind = kind;
      spec.similarity = sim;
      spec.r = 1e-2;
      std::vector<Tensor> h{random_tensor({6, 3}, rng), random_tensor({6, 3}, rng),
                            random_tensor({6, 3}, rng)};
      const auto res = testing::check_gradients(h, [&](Graph&, std::span<const Var> v) {
        return alignment_measure(spec, v).measure;
      });
      EXPECT_LT(res.max_rel_error, 1e-4) << to_string(kind);
    }
  }
}

}  // namespace
}  // namespace mvocc
