// Copyright 2026 The chunkrt Authors
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

#include "chunkrt/actionspace.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chunkrt/error.hpp"
#include "oracles.hpp"

namespace chunkrt {
namespace {

Action Filled(double x) {
  Action a;
  a.v.fill(x);
  return a;
}

TEST(NormStatsTest, MatchesSortOracleOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = trial == 0 ? 1 : 1 + static_cast<int>(rng() % 10000);
    std::vector<Action> actions(n);
    for (Action& a : actions) {
      for (double& x : a.v) x = gauss(rng) * (1 + trial % 5);
    }
    const NormStats s = NormStats::Compute(actions);
    for (int d = 0; d < kActionDim; ++d) {
      std::vector<double> column;
      for (const Action& a : actions) column.push_back(a[d]);
      EXPECT_DOUBLE_EQ(s.lo()[d], oracle::SortPercentile(column, 0.01));
      EXPECT_DOUBLE_EQ(s.hi()[d], oracle::SortPercentile(column, 0.99));
    }
  }
}

TEST(NormStatsTest, UniformDxBoundsNearOneAndNinetyNinePercent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  std::vector<Action> actions(1000);
  for (Action& a : actions) a[kDx] = u(rng);
  const NormStats s = NormStats::Compute(actions);
  EXPECT_NEAR(s.lo()[kDx], -0.0196, 6e-4);
  EXPECT_NEAR(s.hi()[kDx], 0.0196, 6e-4);
}

TEST(NormStatsTest, ConstantAndSingleActionsAreDegenerate) {
  std::vector<Action> same(50, Filled(0.3));
  const NormStats s = NormStats::Compute(same);
  for (int d = 0; d < kActionDim; ++d) {
    EXPECT_EQ(s.lo()[d], 0.3);
    EXPECT_EQ(s.hi()[d], 0.3);
    EXPECT_TRUE(s.Degenerate(d));
    EXPECT_EQ(s.Normalize(Filled(0.7))[d], 0.0);
  }
  const std::vector<Action> one = {Filled(-1.5)};
  const NormStats single = NormStats::Compute(one);
  EXPECT_EQ(single.lo()[0], -1.5);
  EXPECT_EQ(single.hi()[0], -1.5);
}

TEST(NormStatsTest, EmptyInputIsAnError) {
  const std::vector<Action> none;
  try {
    NormStats::Compute(none);
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("no actions"), std::string::npos);
  }
}

TEST(NormalizeTest, BoundaryMidpointAndIdentityRange) {
  std::array<double, kActionDim> lo{}, hi{};
  for (int d = 0; d < kActionDim; ++d) {
    lo[d] = -0.5 * (d + 1);
    hi[d] = 0.25 * (d + 1);
  }
  const NormStats s(lo, hi);
  Action at_lo, mid;
  for (int d = 0; d < kActionDim; ++d) {
    at_lo[d] = lo[d];
    mid[d] = 0.5 * (lo[d] + hi[d]);
  }
  for (int d = 0; d < kActionDim; ++d) {
    EXPECT_EQ(s.Normalize(at_lo)[d], -1.0);
    EXPECT_NEAR(s.Normalize(mid)[d], 0.0, 1e-15);
  }
  const NormStats unit;
  EXPECT_EQ(unit.Normalize(Filled(0.25))[3], 0.25);
  EXPECT_EQ(unit.Normalize(Filled(7.0))[0], 1.0);
  EXPECT_EQ(unit.Normalize(Filled(-7.0))[0], -1.0);
}

TEST(NormalizeTest, DenormalizeIsInverseOnUnitBox) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<double, kActionDim> lo{}, hi{};
  for (int d = 0; d < kActionDim; ++d) {
    lo[d] = -0.01 - 0.1 * d;
    hi[d] = 0.02 + 0.3 * d;
  }
  const NormStats s(lo, hi);
  for (int i = 0; i < 1000; ++i) {
    NormalizedAction x;
    for (double& v : x) v = u(rng);
    const NormalizedAction back = s.Normalize(s.Denormalize(x));
    for (int d = 0; d < kActionDim; ++d) EXPECT_NEAR(back[d], x[d], 1e-12);
  }
}

TEST(QuantizerTest, EndpointsAndZero) {
  EXPECT_EQ(QuantizeValue(-1.0), 0);
  EXPECT_EQ(QuantizeValue(1.0), 255);
  EXPECT_EQ(QuantizeValue(0.0), 128);
}

TEST(QuantizerTest, ExhaustiveBinRoundTrip) {
  for (int b = 0; b < kNumBins; ++b) EXPECT_EQ(QuantizeValue(BinCenter(b)), b) << "bin " << b;
}

TEST(QuantizerTest, RandomRoundTripWithinOneBin) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double x = i == 0 ? -1.0 : (i == 1 ? 1.0 : u(rng));
    worst = std::max(worst, std::fabs(BinCenter(QuantizeValue(x)) - x));
  }
  EXPECT_LE(worst, 0.0078125);
}

TEST(QuantizerTest, Monotone) {
  int prev = 0;
  for (int i = 0; i <= 20000; ++i) {
    const int t = QuantizeValue(-1.0 + 2.0 * i / 20000.0);
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(DequantizeTest, ClosedFormBinCentres) {
  const NormStats unit;
  ActionTokens tokens{};
  tokens.fill(0);
  EXPECT_EQ(Dequantize(tokens, unit)[0], -0.99609375);
  tokens.fill(128);
  EXPECT_EQ(Dequantize(tokens, unit)[0], 0.00390625);
}

TEST(DequantizeTest, TokenOutOfRangeIsAnError) {
  ActionTokens tokens{};
  tokens[2] = 256;
  EXPECT_THROW(Dequantize(tokens, NormStats{}), ConfigError);
  tokens[2] = -1;
  EXPECT_THROW(Dequantize(tokens, NormStats{}), ConfigError);
}

TEST(NormStatsIoTest, TextRoundTripIsExact) {
  std::array<double, kActionDim> lo{}, hi{};
  for (int d = 0; d < kActionDim; ++d) {
    lo[d] = -1.0 / (d + 3);
    hi[d] = std::sqrt(2.0) * (d + 1);
  }
  lo[4] = hi[4] = 0.1;  // degenerate dimension survives too
  const NormStats s(lo, hi);
  EXPECT_EQ(NormStats::FromText(s.ToText()), s);

  const auto path = std::filesystem::temp_directory_path() / "chunkrt_normstats_test.txt";
  s.Save(path);
  EXPECT_EQ(NormStats::Load(path), s);
  std::filesystem::remove(path);
}

TEST(NormStatsIoTest, MalformedTextIsRejected) {
  EXPECT_THROW(NormStats::FromText("garbage"), Error);
  EXPECT_THROW(NormStats({1.0, 0, 0, 0, 0, 0, 0}, {0.0, 0, 0, 0, 0, 0, 0}), ConfigError);
}

}  // namespace
}  // namespace chunkrt
