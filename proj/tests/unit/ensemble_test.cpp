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

#include "chunkrt/ensemble.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chunkrt/error.hpp"
#include "oracles.hpp"

namespace chunkrt {
namespace {

// Chunk whose heads hold the given values in the unit box, so normalized and
// raw values coincide under the default NormStats.
DualChunk MakeChunk(const std::vector<std::vector<double>>& cont,
                    const std::vector<std::vector<double>>& disc, double conf = 1.0) {
  DualChunk c;
  for (std::size_t t = 0; t < cont.size(); ++t) {
    Action a, b;
    for (int d = 0; d < kActionDim; ++d) {
      a[d] = cont[t][d];
      b[d] = disc[t][d];
    }
    c.cont.actions.push_back(a);
    c.disc.actions.push_back(b);
    c.disc_conf.push_back(conf);
  }
  return c;
}

std::vector<std::vector<double>> Grid(int k, double value) {
  return std::vector<std::vector<double>>(k, std::vector<double>(kActionDim, value));
}

// Chunk whose per-step MAD equals mad[t]: one dimension differs by 7 * mad.
DualChunk ChunkWithMad(const std::vector<double>& mad) {
  auto cont = Grid(static_cast<int>(mad.size()), 0.0);
  auto disc = cont;
  for (std::size_t t = 0; t < mad.size(); ++t) {
    cont[t][0] = -0.5;
    disc[t][0] = -0.5 + kActionDim * mad[t];
  }
  return MakeChunk(cont, disc);
}

TEST(MadTest, IdenticalHeadsGiveZero) {
  const DualChunk c = MakeChunk(Grid(8, 0.3), Grid(8, 0.3));
  for (double m : MadPerStep(c, NormStats{})) EXPECT_EQ(m, 0.0);
}

TEST(MadTest, OneDimensionOffByPointOne) {
  auto cont = Grid(1, 0.2);
  auto disc = cont;
  disc[0][3] += 0.1;
  EXPECT_NEAR(MadPerStep(MakeChunk(cont, disc), NormStats{})[0], 0.1 / 7.0, 1e-15);
}

TEST(MadTest, MatchesScalarLoopOracleInNormalizedSpace) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::array<double, kActionDim> lo{}, hi{};
  for (int d = 0; d < kActionDim; ++d) {
    lo[d] = -0.02 * (d + 1);
    hi[d] = 0.03 * (d + 1);
  }
  const NormStats stats(lo, hi);
  for (int trial = 0; trial < 500; ++trial) {
    DualChunk c;
    std::vector<std::vector<double>> cn, dn;
    for (int t = 0; t < 8; ++t) {
      Action a, b;
      for (int d = 0; d < kActionDim; ++d) {
        a[d] = u(rng);
        b[d] = u(rng);
      }
      c.cont.actions.push_back(a);
      c.disc.actions.push_back(b);
      c.disc_conf.push_back(0.5);
      std::vector<double> ra, rb;
      for (int d = 0; d < kActionDim; ++d) {
        auto n = [&](double x) {
          const double v = 2.0 * (x - lo[d]) / (hi[d] - lo[d]) - 1.0;
          return std::min(1.0, std::max(-1.0, v));
        };
        ra.push_back(n(a[d]));
        rb.push_back(n(b[d]));
      }
      cn.push_back(ra);
      dn.push_back(rb);
    }
    const auto got = MadPerStep(c, stats);
    const auto want = oracle::Mad(cn, dn);
    for (int t = 0; t < 8; ++t) EXPECT_NEAR(got[t], want[t], 1e-12);
  }
}

TEST(AdaHorizonTest, ZeroDisagreementRunsFullChunk) {
  EnsemblerState state;
  AdaHorizonParams p;
  p.threshold = 0.1;
  const DualChunk c = MakeChunk(Grid(8, 0.1), Grid(8, 0.1));
  const auto out = AdaHorizonStep(c, p, state, NormStats{});
  EXPECT_EQ(out.horizon, 8);
  EXPECT_FALSE(out.escape);
  EXPECT_EQ(out.executed, c.disc);
  EXPECT_EQ(state.replan_ctr, 0);
  EXPECT_EQ(state.max_replan_ctr, 0);
}

TEST(AdaHorizonTest, ScanBreaksAtFirstDisagreement) {
  EnsemblerState state;
  AdaHorizonParams p;
  p.threshold = 0.1;
  const DualChunk c = ChunkWithMad({0, 0, 0, 0, 0.05, 0.2, 0.01, 0});
  const auto out = AdaHorizonStep(c, p, state, NormStats{});
  EXPECT_EQ(out.horizon, 5);
  EXPECT_EQ(out.executed, c.disc.Prefix(5));
  EXPECT_EQ(out.mad.size(), 8u);
}

TEST(AdaHorizonTest, EscapeHatchReturnsWholeDiscreteChunk) {
  EnsemblerState state;
  state.replan_ctr = 3;
  state.max_replan_ctr = 5;
  AdaHorizonParams p;
  const DualChunk c = ChunkWithMad({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  const auto out = AdaHorizonStep(c, p, state, NormStats{});
  EXPECT_TRUE(out.escape);
  EXPECT_EQ(out.horizon, 8);
  EXPECT_EQ(out.executed, c.disc);
  EXPECT_EQ(out.mad.size(), 8u);
}

TEST(AdaHorizonTest, ShortChunkIsAnError) {
  EnsemblerState state;
  AdaHorizonParams p;
  const DualChunk c = MakeChunk(Grid(3, 0.0), Grid(3, 0.0));
  try {
    AdaHorizonStep(c, p, state, NormStats{});
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("chunk shorter than min horizon"), std::string::npos);
  }
}

TEST(AdaHorizonTest, MatchesIndependentInterpreterOnRandomCases) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 12);
    oracle::AlgoParams op;
    op.min_actions = 1 + static_cast<int>(rng() % k);
    op.threshold = 0.01 + 0.2 * u(rng);
    op.replan_threshold = 0.01 + 0.3 * u(rng);
    op.max_replan_count = static_cast<int>(rng() % 8);
    op.next_task_thresh = static_cast<int>(rng() % 8);
    oracle::AlgoState os;
    os.replan_ctr = static_cast<int>(rng() % 8);
    os.max_replan_ctr = static_cast<int>(rng() % 8);

    std::vector<double> mad(k);
    for (double& m : mad) m = 0.2 * u(rng) * u(rng);
    const DualChunk c = ChunkWithMad(mad);

    AdaHorizonParams p;
    p.min_actions = op.min_actions;
    p.threshold = op.threshold;
    p.replan_threshold = op.replan_threshold;
    p.max_replan_count = op.max_replan_count;
    p.next_task_thresh = op.next_task_thresh;
    EnsemblerState s;
    s.replan_ctr = os.replan_ctr;
    s.max_replan_ctr = os.max_replan_ctr;

    const auto out = AdaHorizonStep(c, p, s, NormStats{});
    const auto want = oracle::AdaptiveHorizon(out.mad, op, os);
    ASSERT_EQ(out.horizon, want.horizon) << "trial " << trial;
    ASSERT_EQ(out.escape, want.escape) << "trial " << trial;
    ASSERT_EQ(out.executed, c.disc.Prefix(want.horizon));
    ASSERT_EQ(s.replan_ctr, os.replan_ctr);
    ASSERT_EQ(s.max_replan_ctr, os.max_replan_ctr);
    for (int t = 0; t < k; ++t) ASSERT_NEAR(out.mad[t], mad[t], 1e-12);
  }
}

TEST(AdaHorizonTest, HorizonBoundsAndThresholdMonotonicity) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> mad(8);
    for (double& m : mad) m = u(rng);
    const DualChunk c = ChunkWithMad(mad);
    int prev = 0;
    for (double th : {0.01, 0.03, 0.06, 0.1, 0.15, 1.0}) {
      AdaHorizonParams p;
      p.threshold = th;
      EnsemblerState s;
      s.replan_ctr = static_cast<int>(rng() % 3);
      s.max_replan_ctr = s.replan_ctr;
      const auto out = AdaHorizonStep(c, p, s, NormStats{});
      EXPECT_GE(out.horizon, 4);
      EXPECT_LE(out.horizon, 8);
      if (out.escape) EXPECT_EQ(out.horizon, 8);
      EXPECT_GE(out.horizon, prev);
      prev = out.horizon;
    }
  }
}

TEST(AdaHorizonTest, ResetOnFullHorizonIsOptIn) {
  AdaHorizonParams p;
  EnsemblerState s;
  s.replan_ctr = 2;
  s.max_replan_ctr = 2;
  const DualChunk calm = MakeChunk(Grid(8, 0.0), Grid(8, 0.0));
  AdaHorizonStep(calm, p, s, NormStats{});
  EXPECT_EQ(s.replan_ctr, 2);
  p.reset_on_full_horizon = true;
  AdaHorizonStep(calm, p, s, NormStats{});
  EXPECT_EQ(s.replan_ctr, 0);
  EXPECT_EQ(s.max_replan_ctr, 2);
}

TEST(TemporalEnsembleTest, EmptyHistoryReturnsCurrentStep) {
  EnsemblerState s;
  auto cont = Grid(8, 0.0);
  cont[0] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  const DualChunk c = MakeChunk(cont, Grid(8, 0.9));
  const Action a = TemporalEnsembleStep(c, s, 0.01, 0, 0);
  for (int d = 0; d < kActionDim; ++d) EXPECT_EQ(a[d], cont[0][d]);
}

TEST(TemporalEnsembleTest, ZeroDecayAveragesAndDecayWeightsByAge) {
  for (double m : {0.0, 0.01}) {
    EnsemblerState s;
    auto old_cont = Grid(8, 0.0);
    old_cont[1] = std::vector<double>(kActionDim, 0.2);
    auto new_cont = Grid(8, 0.6);
    TemporalEnsembleStep(MakeChunk(old_cont, old_cont), s, m, 10, 0);
    const Action a = TemporalEnsembleStep(MakeChunk(new_cont, new_cont), s, m, 11, 0);
    const double w_old = std::exp(-m * 1.0);
    const double w_new = 1.0;
    const double want = (w_old * 0.2 + w_new * 0.6) / (w_old + w_new);
    for (int d = 0; d < kActionDim; ++d) EXPECT_NEAR(a[d], want, 1e-12);
    if (m == 0.0) EXPECT_NEAR(a[0], 0.4, 1e-12);
  }
}

TEST(ConfidenceFusionTest, PicksOneHeadWithoutBlending) {
  const DualChunk sure = MakeChunk(Grid(8, 0.1), Grid(8, 0.2), 1.0);
  EXPECT_EQ(ConfidenceFusionStep(sure, 0.8), sure.disc);
  const DualChunk unsure = MakeChunk(Grid(8, 0.1), Grid(8, 0.2), 0.5);
  EXPECT_EQ(ConfidenceFusionStep(unsure, 0.8), unsure.cont);
}

TEST(SimilarityEnsembleTest, EmptyParallelAndOrthogonalHistory) {
  std::vector<double> cur = {1, 0, 0, 0, 0, 0, 0};
  std::vector<double> ortho = {0, 1, 0, 0, 0, 0, 0};
  std::vector<double> scaled = {3, 0, 0, 0, 0, 0, 0};

  EnsemblerState s;
  auto c0 = Grid(8, 0.0);
  c0[0] = cur;
  Action a = SimilarityEnsembleStep(MakeChunk(c0, c0), s, 0, 0);
  EXPECT_EQ(a[0], 1.0);

  // Parallel history prediction: cosine 1, plain average of the two.
  EnsemblerState p;
  auto older = Grid(8, 0.0);
  older[1] = scaled;
  SimilarityEnsembleStep(MakeChunk(older, older), p, 0, 0);
  a = SimilarityEnsembleStep(MakeChunk(c0, c0), p, 1, 0);
  EXPECT_NEAR(a[0], 2.0, 1e-12);

  // Orthogonal history prediction: weight 0.
  EnsemblerState o;
  older[1] = ortho;
  SimilarityEnsembleStep(MakeChunk(older, older), o, 0, 0);
  a = SimilarityEnsembleStep(MakeChunk(c0, c0), o, 1, 0);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(a[1], 0.0);
}

TEST(FixedHorizonTest, SelectsHeadWholeChunk) {
  const DualChunk c = MakeChunk(Grid(8, 0.1), Grid(8, 0.2));
  EXPECT_EQ(FixedHorizonStep(c, true), c.disc);
  EXPECT_EQ(FixedHorizonStep(c, false), c.cont);
  const DualChunk same = MakeChunk(Grid(8, 0.3), Grid(8, 0.3));
  EXPECT_EQ(FixedHorizonStep(same, true), FixedHorizonStep(same, false));
}

TEST(EnsemblerTest, NamesRoundTripAndEmptyChunkRejected) {
  for (EnsemblerKind k : AllEnsemblerKinds()) EXPECT_EQ(ParseEnsemblerKind(ToString(k)), k);
  EXPECT_EQ(AllEnsemblerKinds().size(), 6u);
  EXPECT_THROW(ParseEnsemblerKind("nope"), ConfigError);
  for (EnsemblerKind k : AllEnsemblerKinds()) {
    EnsemblerConfig cfg;
    cfg.kind = k;
    Ensembler e(cfg, NormStats{});
    EXPECT_THROW(e.Step(DualChunk{}, 0), ConfigError) << ToString(k);
  }
}

TEST(EnsemblerTest, InfiniteThresholdMakesAdaHorizonEqualFixedDiscrete) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  EnsemblerConfig ada;
  ada.adahorizon.threshold = std::numeric_limits<double>::infinity();
  ada.adahorizon.replan_threshold = std::numeric_limits<double>::infinity();
  EnsemblerConfig fixed;
  fixed.kind = EnsemblerKind::kFixedDiscrete;
  Ensembler a(ada, NormStats{});
  Ensembler f(fixed, NormStats{});
  for (int i = 0; i < 100; ++i) {
    auto cont = Grid(8, 0.0);
    auto disc = Grid(8, 0.0);
    for (int t = 0; t < 8; ++t) {
      for (int d = 0; d < kActionDim; ++d) {
        cont[t][d] = u(rng);
        disc[t][d] = u(rng);
      }
    }
    const DualChunk c = MakeChunk(cont, disc);
    EXPECT_EQ(a.Step(c, i).actions, f.Step(c, i).actions);
  }
}

}  // namespace
}  // namespace chunkrt
