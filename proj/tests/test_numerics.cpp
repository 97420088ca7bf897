/*
 * Copyright 2026 The defedavg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "defedavg/error.hpp"
#include "defedavg/numerics.hpp"
#include "defedavg/rng.hpp"
#include "defedavg/weights.hpp"

namespace defedavg {
namespace {

// Known-answer vectors for the Philox4x32-10 block function.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(RngStream, SameAddressSameSequence) {
  RngStream a = derive_stream(42, "a");
  RngStream b = derive_stream(42, "a");
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DifferentLabelsDiffer) {
  RngStream a = derive_stream(42, "a");
  RngStream b = derive_stream(42, "b");
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(RngStream, DifferentSeedsDiffer) {
  RngStream a = derive_stream(1, "a");
  RngStream b = derive_stream(2, "a");
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(RngStream, EmptyLabelRejected) { EXPECT_THROW(derive_stream(1, ""), NumericError); }

TEST(RngStream, UniformMean) {
  RngStream rng = derive_stream(42, "u01");
  double sum = 0.0;
  constexpr int kDraws = 1000000;
  for (int i = 0; i < kDraws; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / kDraws, 0.5, 0.002);
}

TEST(RngStream, UniformIndexFrequencies) {
  constexpr std::uint64_t kN = 7;
  constexpr int kDraws = 100000;
  RngStream rng = derive_stream(3, "index");
  std::vector<int> counts(kN, 0);
  for (int i = 0; i < kDraws; ++i) ++counts[rng.uniform_index(kN)];
  const double p = 1.0 / kN;
  const double se = std::sqrt(p * (1 - p) / kDraws);
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / kDraws, p, 4 * se);
}

TEST(RngStream, UniformIndexZeroThrows) {
  RngStream rng = derive_stream(3, "index");
  EXPECT_THROW(rng.uniform_index(0), NumericError);
}

TEST(RngStream, NormalMoments) {
  RngStream rng = derive_stream(5, "normal");
  RunningStats s;
  for (int i = 0; i < 200000; ++i) s.add(rng.normal());
  EXPECT_NEAR(s.mean(), 0.0, 4 * s.standard_error());
  EXPECT_NEAR(s.variance(), 1.0, 0.02);
}

TEST(RngStream, ChildIsLabelJoin) {
  RngStream parent = derive_stream(9, "client/7");
  RngStream child = parent.child("round/3");
  RngStream direct = derive_stream(9, "client/7/round/3");
  EXPECT_EQ(child.label(), "client/7/round/3");
  EXPECT_EQ(child.next_u64(), direct.next_u64());
}

TEST(RngStream, PositionCountsWords) {
  RngStream rng = derive_stream(9, "pos");
  EXPECT_EQ(rng.position(), 0u);
  rng.next_u64();
  rng.uniform01();
  EXPECT_EQ(rng.position(), 2u);
}

TEST(Shuffle, IsPermutationAndDeterministic) {
  std::vector<int> a(50), b(50);
  for (int i = 0; i < 50; ++i) a[i] = b[i] = i;
  RngStream r1 = derive_stream(1, "shuffle");
  RngStream r2 = derive_stream(1, "shuffle");
  shuffle(std::span(a), r1);
  shuffle(std::span(b), r2);
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Weights, Arithmetic) {
  Weights a{1.0, 2.0};
  Weights b{3.0, -1.0};
  EXPECT_EQ(a + b, (Weights{4.0, 1.0}));
  EXPECT_EQ(a - b, (Weights{-2.0, 3.0}));
  EXPECT_EQ(2.0 * a, (Weights{2.0, 4.0}));
  EXPECT_DOUBLE_EQ(a.dot(b), 1.0);
  EXPECT_DOUBLE_EQ(b.norm_sq(), 10.0);
  a.axpy(0.5, b);
  EXPECT_EQ(a, (Weights{2.5, 1.5}));
  EXPECT_DOUBLE_EQ(max_abs_diff(a, b), 2.5);
}

TEST(Weights, DimensionMismatchThrows) {
  Weights a(2), b(3);
  EXPECT_THROW(a += b, NumericError);
  EXPECT_THROW(require_same_dim(a, b, "test"), NumericError);
}

TEST(Weights, RequireFiniteNamesComponent) {
  Weights w{0.0, std::nan("")};
  EXPECT_FALSE(w.all_finite());
  try {
    w.require_finite("probe");
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("probe"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(FiniteDifference, HalfSquaredNorm) {
  LossFn f = [](const Weights& w) { return 0.5 * w.norm_sq(); };
  const Weights g = finite_difference_gradient(f, Weights{3.0, 4.0}, 1e-6);
  EXPECT_NEAR(g[0], 3.0, 1e-8);
  EXPECT_NEAR(g[1], 4.0, 1e-8);
}

TEST(FiniteDifference, ConstantIsZero) {
  LossFn f = [](const Weights&) { return 7.0; };
  const Weights g = finite_difference_gradient(f, Weights{1.0, -2.0, 5.0}, 1e-6);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDifference, NonFiniteProbeNamesComponent) {
  LossFn f = [](const Weights& w) { return w[1] > 0.5 ? std::log(-1.0) : 0.0; };
  try {
    finite_difference_gradient(f, Weights{0.0, 0.5}, 1e-3);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("component 1"), std::string::npos) << e.what();
  }
}

TEST(FiniteDifference, RejectsNonPositiveStep) {
  LossFn f = [](const Weights&) { return 0.0; };
  EXPECT_THROW(finite_difference_gradient(f, Weights{1.0}, 0.0), NumericError);
}

TEST(RunningStats, MatchesTwoPassFormulas) {
  const std::vector<double> xs{1.0, 4.0, 2.0, 8.0, 5.0};
  RunningStats s;
  for (double x : xs) s.add(x);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size() - 1;
  EXPECT_DOUBLE_EQ(s.mean(), mean);
  EXPECT_NEAR(s.variance(), var, 1e-12);
  EXPECT_NEAR(s.standard_error(), std::sqrt(var / xs.size()), 1e-12);
}

TEST(RelativeError, ScalesByReference) {
  EXPECT_DOUBLE_EQ(relative_l2_error(Weights{1.0, 1.0}, Weights{1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(relative_l2_error(Weights{2.0}, Weights{2.0}), 0.0);
}

}  // namespace
}  // namespace defedavg
