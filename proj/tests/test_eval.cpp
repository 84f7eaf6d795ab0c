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

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvocc/eval.hpp"
#include "mvocc/rng.hpp"
#include "oracles.hpp"

namespace mvocc {
namespace {

using oracle::random_scores;

TEST(LateFuse, Examples) {
  const Tensor s = Tensor::matrix({{0.2, 0.4}});
  EXPECT_DOUBLE_EQ(late_fuse(LateFusion::Avg, s)[0], 0.3);
  EXPECT_DOUBLE_EQ(late_fuse(LateFusion::Min, s)[0], 0.2);
  EXPECT_DOUBLE_EQ(late_fuse(LateFusion::Max, s)[0], 0.4);
}

TEST(LateFuse, EmptyIsError) {
  EXPECT_THROW(late_fuse(LateFusion::Avg, Tensor()), ShapeError);
}

TEST(LateFuse, ParseStrategy) {
  EXPECT_EQ(parse_late_fusion("MIN"), LateFusion::Min);
  EXPECT_THROW(parse_late_fusion("MEDIAN"), ConfigError);
}

TEST(Auroc, Examples) {
  const std::vector<double> s{0.9, 0.1, 0.2};
  const std::vector<int> y{-1, 1, 1};
  EXPECT_EQ(auroc(s, y), 1.0);
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(auroc(flat, std::vector<int>{-1, 1, 1, -1}), 0.5);
}

TEST(Auroc, SingleClassIsUndefined) {
  const std::vector<double> s{0.1, 0.2};
  EXPECT_THROW(auroc(s, std::vector<int>{1, 1}), UndefinedMetricError);
  EXPECT_THROW(aupr(s, std::vector<int>{-1, -1}), UndefinedMetricError);
  EXPECT_THROW(tnr_at_tpr(s, std::vector<int>{1, 1}), UndefinedMetricError);
}

TEST(Auroc, MatchesPairCountingOracle) {
  Rng rng(1);
  for (int set = 0; set < 100; ++set) {
    const auto [s, y] = random_scores(50, rng, set % 3 == 0);
    EXPECT_NEAR(auroc(s, y), oracle::auroc_pairs(s, y), 1e-12);
  }
}

TEST(Auroc, NegationSymmetry) {
  Rng rng(2);
  for (int set = 0; set < 50; ++set) {
    auto [s, y] = random_scores(40, rng, true);
    const double a = auroc(s, y);
    for (double& v : s) v = -v;
    EXPECT_EQ(a + auroc(s, y), 1.0);
  }
}

TEST(Metrics, InvariantUnderIncreasingTransform) {
  Rng rng(3);
  for (int set = 0; set < 20; ++set) {
    const auto [s, y] = random_scores(50, rng, true);
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) + 7.0;
    EXPECT_EQ(auroc(s, y), auroc(t, y));
    EXPECT_EQ(aupr(s, y), aupr(t, y));
    EXPECT_EQ(tnr_at_tpr(s, y), tnr_at_tpr(t, y));
  }
}

// Duplicating a view only preserves the AVG ordering when every view carries
// the same scores; (a + b)/2 and (a + 2b)/3 can rank rows differently.
TEST(Metrics, DuplicatedViewDoesNotChangeAvgFusedAuroc) {
  Rng rng(4);
  const auto [a, y] = random_scores(30, rng, false);
  Tensor two({30, 2}), three({30, 3});
  for (std::size_t i = 0; i < 30; ++i) two(i, 0) = two(i, 1) = three(i, 0) = three(i, 1) = three(i, 2) = a[i];
  EXPECT_EQ(auroc(late_fuse(LateFusion::Avg, two), y), auroc(late_fuse(LateFusion::Avg, three), y));
  EXPECT_EQ(auroc(late_fuse(LateFusion::Avg, two), y), auroc(a, y));
}

TEST(Aupr, Examples) {
  const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
  const std::vector<int> y{-1, -1, 1, 1};
  EXPECT_EQ(aupr(s, y), 1.0);
  const std::vector<double> flat(5, 0.4);
  EXPECT_DOUBLE_EQ(aupr(flat, std::vector<int>{-1, 1, 1, -1, 1}), 0.4);
}

TEST(Aupr, MatchesThresholdEnumerationOracle) {
  Rng rng(5);
  for (int set = 0; set < 100; ++set) {
    const auto [s, y] = random_scores(50, rng, set % 2 == 0);
    EXPECT_NEAR(aupr(s, y), oracle::aupr_thresholds(s, y), 1e-12);
  }
}

TEST(TnrAtTpr, Examples) {
  const std::vector<double> s{0.9, 0.1, 0.2};
  const std::vector<int> y{-1, 1, 1};
  EXPECT_EQ(tnr_at_tpr(s, y), 1.0);
  const std::vector<double> flat(6, 0.5);
  EXPECT_EQ(tnr_at_tpr(flat, std::vector<int>{-1, 1, 1, -1, 1, 1}), 0.0);
}

TEST(TnrAtTpr, ThresholdAdmitsNinetyFivePercent) {
  // 20 positives at 1..20: the 19th admits 95%; negatives at 19.5 and 20.5.
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 1; i <= 20; ++i) {
    s.push_back(i);
    y.push_back(1);
  }
  s.insert(s.end(), {19.5, 20.5, 18.0});
  y.insert(y.end(), {-1, -1, -1});
  EXPECT_DOUBLE_EQ(tnr_at_tpr(s, y), 2.0 / 3.0);
}

TEST(TnrAtTpr, MatchesSweepOracle) {
  Rng rng(6);
  for (int set = 0; set < 100; ++set) {
    const auto [s, y] = random_scores(50, rng, set % 2 == 1);
    EXPECT_EQ(tnr_at_tpr(s, y), oracle::tnr_sweep(s, y, 0.95));
  }
}

TEST(Metrics, StayInUnitInterval) {
  Rng rng(7);
  for (int set = 0; set < 50; ++set) {
    const auto [s, y] = random_scores(25, rng, true);
    for (double m : {auroc(s, y), aupr(s, y), tnr_at_tpr(s, y)}) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
  }
}

// Reference p-values from scipy.stats.ttest_ind(a, b, equal_var=False).
TEST(Welch, MatchesReferenceValues) {
  struct Case {
    std::vector<double> a, b;
    double p;
  };
  const Case cases[] = {
      {{0.91, 0.93, 0.92, 0.95, 0.90}, {0.88, 0.85, 0.90, 0.87, 0.86}, 0.0033907528930060505},
      {{1, 2, 3, 4}, {2, 4, 6, 8, 10, 12}, 0.03182444378084147},
      {{0.5, 0.52}, {0.49, 0.55, 0.51}, 0.7646543733535647},
      {{10.1, 9.8, 10.3, 10.0, 9.9, 10.2, 10.4}, {10.0, 10.1, 9.7}, 0.3154603111069867},
  };
  for (const Case& c : cases) EXPECT_NEAR(welch_t_test(c.a, c.b), c.p, 1e-10 * std::max(1.0, c.p));
}

TEST(Welch, IdenticalSamplesGivePOne) {
  const std::vector<double> a{0.8, 0.8, 0.8};
  EXPECT_EQ(welch_t_test(a, a), 1.0);
  const std::vector<double> b{0.7, 0.9, 0.8};
  EXPECT_NEAR(welch_t_test(b, b), 1.0, 1e-12);
}

TEST(Welch, SeparatedSamplesAreSignificant) {
  std::vector<double> a, b;
  for (int i = 0; i < 10; ++i) {
    const double jitter = (i % 2 ? -1e-3 : 1e-3);
    a.push_back(0.99 + jitter);
    b.push_back(0.50 + jitter);
  }
  EXPECT_LT(welch_t_test(a, b), 0.01);
}

TEST(Welch, NeedsTwoValues) {
  const std::vector<double> a{0.5}, b{0.5, 0.6};
  EXPECT_THROW(welch_t_test(a, b), ConfigError);
}

TEST(Summary, MeanWithinRangeAndSampleStd) {
  const std::vector<double> x{1, 2, 3, 4};
  const Summary s = summarize(x);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(5.0 / 3.0));
}

}  // namespace
}  // namespace mvocc
