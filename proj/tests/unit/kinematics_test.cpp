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

#include "chunkrt/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chunkrt/error.hpp"
#include "oracles.hpp"

namespace chunkrt {
namespace {

constexpr double kPi = std::numbers::pi;

JointAngles RandomInLimits(const KinematicChain& chain, std::mt19937_64& rng) {
  JointAngles q{};
  for (int i = 0; i < kNumJoints; ++i) {
    std::uniform_real_distribution<double> u(chain.joints[i].min_rad, chain.joints[i].max_rad);
    q[i] = u(rng);
  }
  return q;
}

Eigen::Matrix4d OracleTip(const KinematicChain& chain, const JointAngles& q) {
  std::array<bool, 6> roll{};
  std::array<Eigen::Vector3d, 6> offsets;
  for (int i = 0; i < kNumJoints; ++i) {
    roll[i] = chain.joints[i].axis == JointAxis::kRoll;
    offsets[i] = chain.joints[i].offset_mm;
  }
  return oracle::ChainProduct(roll, offsets, q, 6) * oracle::Trans(chain.gripper_offset_mm);
}

TEST(ChainTest, DefaultReach) {
  const KinematicChain chain = KinematicChain::Default();
  EXPECT_NO_THROW(chain.Validate());
  EXPECT_NEAR(chain.WristReachMm(), 382.0, 1e-9);
  EXPECT_NEAR(chain.TipReachMm(), 460.0, 1e-9);
  const Pose home = Fk(chain, JointAngles{});
  EXPECT_NEAR(home.position_mm.z(), 460.0, 1e-9);
  EXPECT_NEAR(home.position_mm.head<2>().norm(), 0.0, 1e-12);
}

TEST(ChainTest, AxisPatternEnforced) {
  KinematicChain chain = KinematicChain::Default();
  chain.joints[2].axis = JointAxis::kRoll;
  EXPECT_THROW(chain.Validate(), ConfigError);
  chain = KinematicChain::Default();
  chain.joints[1].min_rad = 2.0;
  EXPECT_THROW(chain.Validate(), ConfigError);
}

TEST(ChainTest, JsonRoundTrip) {
  KinematicChain chain = KinematicChain::Default();
  chain.joints[1].offset_mm = {0, 5, 120};
  chain.servo.zero_offset_rad[2] = 0.5;
  const KinematicChain back = KinematicChain::FromJsonText(chain.ToJsonText());
  for (int i = 0; i < kNumJoints; ++i) {
    EXPECT_EQ(back.joints[i].axis, chain.joints[i].axis);
    EXPECT_EQ(back.joints[i].offset_mm, chain.joints[i].offset_mm);
    EXPECT_EQ(back.joints[i].min_rad, chain.joints[i].min_rad);
    EXPECT_EQ(back.joints[i].max_rad, chain.joints[i].max_rad);
  }
  EXPECT_EQ(back.servo.zero_offset_rad, chain.servo.zero_offset_rad);
  EXPECT_THROW(KinematicChain::FromJsonText(R"({"joints": [], "bogus": 1})"), ConfigError);
  EXPECT_THROW(KinematicChain::FromJsonText("{not json"), ConfigError);
}

TEST(FkTest, MatchesHomogeneousProductOracle) {
  const KinematicChain chain = KinematicChain::Default();
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const JointAngles q = RandomInLimits(chain, rng);
    const Eigen::Matrix4d want = OracleTip(chain, q);
    const Pose got = Fk(chain, q);
    EXPECT_LE((got.position_mm - want.block<3, 1>(0, 3)).norm(), 1e-9);
    EXPECT_LE((got.rotation - want.block<3, 3>(0, 0)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FkTest, BaseRollRotatesAboutVertical) {
  const KinematicChain chain = KinematicChain::Default();
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    JointAngles q = RandomInLimits(chain, rng);
    const Pose a = Fk(chain, q);
    q[0] = 0.0;
    const Pose b = Fk(chain, q);
    EXPECT_NEAR(a.position_mm.z(), b.position_mm.z(), 1e-9);
    EXPECT_NEAR(a.position_mm.head<2>().norm(), b.position_mm.head<2>().norm(), 1e-9);
  }
}

TEST(FkTest, WristToTipDistanceIsConstant) {
  const KinematicChain chain = KinematicChain::Default();
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const JointAngles q = RandomInLimits(chain, rng);
    EXPECT_NEAR((Fk(chain, q).position_mm - WristPosition(chain, q)).norm(), 78.0, 1e-9);
  }
}

TEST(IkTest, RecoversRandomReachablePoses) {
  const KinematicChain chain = KinematicChain::Default();
  std::mt19937_64 rng(24);
  int converged = 0;
  const int n = 100;
  for (int trial = 0; trial < n; ++trial) {
    const JointAngles q = RandomInLimits(chain, rng);
    const Pose target = Fk(chain, q);
    IkOptions opts;
    opts.seed = trial;
    const IkResult r = Ik(chain, target, JointAngles{}, opts);
    if (!r.converged) continue;
    ++converged;
    EXPECT_TRUE(chain.WithinLimits(r.q));
    const Pose back = Fk(chain, r.q);
    EXPECT_LE((back.position_mm - target.position_mm).norm(), 1.0);
    EXPECT_LE(OrientationError(back.rotation, target.rotation), 0.01);
  }
  EXPECT_GE(converged, 99);
}

TEST(IkTest, ReachBoundary) {
  const KinematicChain chain = KinematicChain::Default();
  Pose edge;
  edge.position_mm = {0, 0, 460.0};
  IkOptions opts;
  opts.position_only = true;
  EXPECT_TRUE(Ik(chain, edge, JointAngles{}, opts).converged);
  Pose far;
  far.position_mm = {500.0, 0, 0};
  EXPECT_THROW(Ik(chain, far, JointAngles{}, opts), UnreachableError);
}

TEST(IkTest, PositionOnlyReachesWorkspacePoints) {
  const KinematicChain chain = KinematicChain::Default();
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> x(180, 320), y(-120, 120), z(20, 200);
  for (int trial = 0; trial < 50; ++trial) {
    Pose t;
    t.position_mm = {x(rng), y(rng), z(rng)};
    IkOptions opts;
    opts.position_only = true;
    opts.seed = trial;
    const IkResult r = Ik(chain, t, JointAngles{}, opts);
    ASSERT_TRUE(r.converged) << t.position_mm.transpose();
    EXPECT_LE((Fk(chain, r.q).position_mm - t.position_mm).norm(), 1.0);
  }
}

TEST(PwmTest, TicksAtCalibrationPoints) {
  const ServoCalib calib;
  const auto at = [&](double a) { return AnglesToPwm(JointAngles{a, a, a, a, a, a}, calib); };
  EXPECT_EQ(at(0.0)[0], 102);
  EXPECT_EQ(at(kPi / 2)[0], 307);
  EXPECT_EQ(at(kPi)[0], 512);
  EXPECT_EQ(at(-1.0)[0], 102);
  EXPECT_EQ(at(4.0)[0], 512);
}

TEST(PwmTest, MonotoneAndDirectionAware) {
  ServoCalib calib;
  calib.direction[1] = -1;
  calib.zero_offset_rad[1] = kPi;
  int prev0 = -1, prev1 = 1 << 20;
  for (int i = 0; i <= 100; ++i) {
    const double a = kPi * i / 100.0;
    const auto ticks = AnglesToPwm(JointAngles{a, a, 0, 0, 0, 0}, calib);
    EXPECT_GE(ticks[0], prev0);
    EXPECT_LE(ticks[1], prev1);
    prev0 = ticks[0];
    prev1 = ticks[1];
  }
}

TEST(SpeedTest, EeSpeedCheck) {
  const KinematicChain chain = KinematicChain::Default();
  JointAngles a{}, b{};
  b[1] = 0.01;
  const std::vector<JointAngles> traj = {a, b};
  const double dist_m = (Fk(chain, a).position_mm - Fk(chain, b).position_mm).norm() / 1000.0;
  EXPECT_NEAR(EeSpeedCheck(chain, traj, 0.1), dist_m / 0.1, 1e-12);
  EXPECT_LT(EeSpeedCheck(chain, traj, 0.1), kMaxEeSpeed);
  const std::vector<JointAngles> one = {a};
  EXPECT_THROW(EeSpeedCheck(chain, one, 0.1), ConfigError);
  EXPECT_THROW(EeSpeedCheck(chain, traj, 0.0), ConfigError);
}

}  // namespace
}  // namespace chunkrt
