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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "chunkrt/error.hpp"
#include "chunkrt/noise.hpp"

namespace chunkrt {
namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

Eigen::Matrix3d JointRotation(JointAxis axis, double angle) {
  const Eigen::Vector3d dir =
      axis == JointAxis::kRoll ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitY();
  return Eigen::AngleAxisd(angle, dir).toRotationMatrix();
}

// Frame of joint `upto` (exclusive) composed from the base.
Eigen::Isometry3d ChainFrame(const KinematicChain& chain, const JointAngles& q, int upto) {
  Eigen::Isometry3d frame = Eigen::Isometry3d::Identity();
  for (int i = 0; i < upto; ++i) {
    frame.linear() = frame.linear() * JointRotation(chain.joints[i].axis, q[i]);
    frame.translation() += frame.linear() * chain.joints[i].offset_mm;
  }
  return frame;
}

Eigen::Vector3d RotationVector(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

// 6-vector pose error: mm for position, weighted rad for orientation.
Eigen::Matrix<double, 6, 1> PoseError(const Pose& target, const Pose& current,
                                      const IkOptions& options) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.position_mm - current.position_mm;
  if (options.position_only) {
    e.tail<3>().setZero();
  } else {
    e.tail<3>() = options.orientation_weight_mm *
                  RotationVector(target.rotation * current.rotation.transpose());
  }
  return e;
}

IkResult Solve(const KinematicChain& chain, const Pose& target, JointAngles q,
               const IkOptions& options) {
  IkResult result;
  constexpr double kDelta = 1e-6;
  const double lambda2 = options.damping * options.damping;
  q = chain.Clamp(q);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Pose current = Fk(chain, q);
    const Eigen::Matrix<double, 6, 1> e = PoseError(target, current, options);
    result.iterations = it + 1;
    // Iterate well past the reporting tolerance; stop when the step stalls.
    if (e.head<3>().norm() < 1e-6 && e.tail<3>().norm() < 1e-6) break;

    Eigen::Matrix<double, 6, kNumJoints> jac;
    for (int j = 0; j < kNumJoints; ++j) {
      JointAngles plus = q;
      JointAngles minus = q;
      plus[j] += kDelta;
      minus[j] -= kDelta;
      const Eigen::Matrix<double, 6, 1> ep = PoseError(target, Fk(chain, plus), options);
      const Eigen::Matrix<double, 6, 1> em = PoseError(target, Fk(chain, minus), options);
      // PoseError is target - current, so its derivative is -J.
      jac.col(j) = (em - ep) / (2.0 * kDelta);
    }
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    Eigen::Matrix<double, kNumJoints, 1> dq =
        jac.transpose() * jjt.ldlt().solve(e);
    const double largest = dq.cwiseAbs().maxCoeff();
    if (largest > 0.5) dq *= 0.5 / largest;
    if (largest < 1e-14) break;
    for (int j = 0; j < kNumJoints; ++j) q[j] += dq[j];
    q = chain.Clamp(q);
  }
  const Pose reached = Fk(chain, q);
  result.q = q;
  result.position_error_mm = (target.position_mm - reached.position_mm).norm();
  result.orientation_error_rad =
      options.position_only ? 0.0 : OrientationError(target.rotation, reached.rotation);
  result.converged = result.position_error_mm <= options.position_tolerance_mm &&
                     result.orientation_error_rad <= options.orientation_tolerance_rad;
  return result;
}

bool Better(const IkResult& a, const IkResult& b) {
  if (a.converged != b.converged) return a.converged;
  return a.position_error_mm + 100.0 * a.orientation_error_rad <
         b.position_error_mm + 100.0 * b.orientation_error_rad;
}

std::string AxisName(JointAxis axis) { return axis == JointAxis::kRoll ? "roll" : "pitch"; }

JointAxis ParseAxis(const std::string& name) {
  if (name == "roll") return JointAxis::kRoll;
  if (name == "pitch") return JointAxis::kPitch;
  throw ConfigError("unknown joint axis '" + name + "'");
}

void RejectUnknownKeys(const json& j, std::initializer_list<const char*> keys,
                       const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

void ServoCalib::Validate() const {
  if (!(pulse_min_us >= 0.0 && pulse_max_us > pulse_min_us && pulse_max_us <= frame_us)) {
    throw ConfigError("servo pulse range must lie within the PWM frame");
  }
  if (!(angle_range_rad > 0.0)) throw ConfigError("servo angle range must be > 0");
  if (resolution != 4096) throw ConfigError("servo driver resolution must be 4096 (12 bit)");
}

KinematicChain KinematicChain::Default() {
  KinematicChain chain;
  const double roll = kPi;
  const double pitch = kPi / 2.0;
  chain.joints[0] = {JointAxis::kRoll, {0, 0, 107}, -roll, roll};
  chain.joints[1] = {JointAxis::kPitch, {0, 0, 130}, -pitch, pitch};
  chain.joints[2] = {JointAxis::kPitch, {0, 0, 130}, -pitch, pitch};
  chain.joints[3] = {JointAxis::kRoll, {0, 0, 15}, -roll, roll};
  chain.joints[4] = {JointAxis::kPitch, {0, 0, 0}, -pitch, pitch};
  chain.joints[5] = {JointAxis::kRoll, {0, 0, 0}, -roll, roll};
  chain.gripper_offset_mm = {0, 0, 78};
  chain.wrist_joint = 4;
  return chain;
}

void KinematicChain::Validate() const {
  constexpr std::array<JointAxis, kNumJoints> kPattern = {
      JointAxis::kRoll, JointAxis::kPitch, JointAxis::kPitch,
      JointAxis::kRoll, JointAxis::kPitch, JointAxis::kRoll};
  for (int i = 0; i < kNumJoints; ++i) {
    if (joints[i].axis != kPattern[i]) {
      throw ConfigError("joint axes must follow roll-pitch-pitch-roll-pitch-roll");
    }
    if (!(joints[i].min_rad <= joints[i].max_rad)) {
      throw ConfigError("joint " + std::to_string(i) + ": min limit above max");
    }
  }
  if (wrist_joint < 1 || wrist_joint >= kNumJoints) throw ConfigError("wrist_joint out of range");
  servo.Validate();
}

bool KinematicChain::WithinLimits(const JointAngles& q) const {
  for (int i = 0; i < kNumJoints; ++i) {
    if (q[i] < joints[i].min_rad || q[i] > joints[i].max_rad) return false;
  }
  return true;
}

JointAngles KinematicChain::Clamp(JointAngles q) const {
  for (int i = 0; i < kNumJoints; ++i) q[i] = std::clamp(q[i], joints[i].min_rad, joints[i].max_rad);
  return q;
}

double KinematicChain::WristReachMm() const { return WristPosition(*this, JointAngles{}).norm(); }

double KinematicChain::TipReachMm() const {
  double reach = gripper_offset_mm.norm();
  for (const JointSpec& j : joints) reach += j.offset_mm.norm();
  return reach;
}

KinematicChain KinematicChain::FromJsonText(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("chain config: ") + e.what());
  }
  try {
    RejectUnknownKeys(j, {"joints", "gripper_offset_mm", "wrist_joint", "servo"}, "chain");
    KinematicChain chain = Default();
    if (j.contains("joints")) {
      const json& list = j.at("joints");
      if (!list.is_array() || list.size() != kNumJoints) {
        throw ConfigError("chain: need exactly 6 joints");
      }
      for (int i = 0; i < kNumJoints; ++i) {
        const json& jj = list[i];
        RejectUnknownKeys(jj, {"axis", "offset_mm", "limits_rad"}, "chain joint");
        JointSpec& spec = chain.joints[i];
        if (jj.contains("axis")) spec.axis = ParseAxis(jj.at("axis").get<std::string>());
        if (jj.contains("offset_mm")) {
          const auto v = jj.at("offset_mm").get<std::array<double, 3>>();
          spec.offset_mm = {v[0], v[1], v[2]};
        }
        if (jj.contains("limits_rad")) {
          const auto lim = jj.at("limits_rad").get<std::array<double, 2>>();
          spec.min_rad = lim[0];
          spec.max_rad = lim[1];
        }
      }
    }
    if (j.contains("gripper_offset_mm")) {
      const auto v = j.at("gripper_offset_mm").get<std::array<double, 3>>();
      chain.gripper_offset_mm = {v[0], v[1], v[2]};
    }
    if (j.contains("wrist_joint")) chain.wrist_joint = j.at("wrist_joint").get<int>();
    if (j.contains("servo")) {
      const json& s = j.at("servo");
      RejectUnknownKeys(s, {"pulse_min_us", "pulse_max_us", "angle_range_rad", "frame_us",
                            "resolution", "zero_offset_rad", "direction"},
                        "servo");
      ServoCalib& c = chain.servo;
      c.pulse_min_us = s.value("pulse_min_us", c.pulse_min_us);
      c.pulse_max_us = s.value("pulse_max_us", c.pulse_max_us);
      c.angle_range_rad = s.value("angle_range_rad", c.angle_range_rad);
      c.frame_us = s.value("frame_us", c.frame_us);
      c.resolution = s.value("resolution", c.resolution);
      if (s.contains("zero_offset_rad")) {
        c.zero_offset_rad = s.at("zero_offset_rad").get<std::array<double, kNumJoints>>();
      }
      if (s.contains("direction")) c.direction = s.at("direction").get<std::array<double, kNumJoints>>();
    }
    chain.Validate();
    return chain;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("chain config: ") + e.what());
  }
}

KinematicChain KinematicChain::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read chain config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJsonText(buffer.str());
}

std::string KinematicChain::ToJsonText() const {
  json list = json::array();
  for (const JointSpec& spec : joints) {
    list.push_back({{"axis", AxisName(spec.axis)},
                    {"offset_mm", {spec.offset_mm.x(), spec.offset_mm.y(), spec.offset_mm.z()}},
                    {"limits_rad", {spec.min_rad, spec.max_rad}}});
  }
  const json j = {
      {"joints", list},
      {"gripper_offset_mm",
       {gripper_offset_mm.x(), gripper_offset_mm.y(), gripper_offset_mm.z()}},
      {"wrist_joint", wrist_joint},
      {"servo",
       {{"pulse_min_us", servo.pulse_min_us},
        {"pulse_max_us", servo.pulse_max_us},
        {"angle_range_rad", servo.angle_range_rad},
        {"frame_us", servo.frame_us},
        {"resolution", servo.resolution},
        {"zero_offset_rad", servo.zero_offset_rad},
        {"direction", servo.direction}}}};
  return j.dump(2);
}

Pose Fk(const KinematicChain& chain, const JointAngles& q) {
  const Eigen::Isometry3d frame = ChainFrame(chain, q, kNumJoints);
  Pose pose;
  pose.rotation = frame.linear();
  pose.position_mm = frame.translation() + frame.linear() * chain.gripper_offset_mm;
  return pose;
}

Eigen::Vector3d WristPosition(const KinematicChain& chain, const JointAngles& q) {
  return ChainFrame(chain, q, chain.wrist_joint).translation();
}

double OrientationError(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return Eigen::AngleAxisd(a * b.transpose()).angle();
}

IkResult Ik(const KinematicChain& chain, const Pose& target, const JointAngles& q0,
            const IkOptions& options) {
  const double reach = chain.TipReachMm();
  if (target.position_mm.norm() > reach + 1e-9) {
    throw UnreachableError("unreachable: target " + std::to_string(target.position_mm.norm()) +
                           " mm from base exceeds " + std::to_string(reach) + " mm reach");
  }
  IkResult best = Solve(chain, target, q0, options);
  // Restart until the error is well inside the tolerance: a start that stalls
  // against a joint limit can end just under it.
  auto tight = [&](const IkResult& r) {
    return r.position_error_mm <= 0.01 * options.position_tolerance_mm &&
           r.orientation_error_rad <= 0.01 * options.orientation_tolerance_rad;
  };
  std::mt19937_64 rng(DeriveSeed(options.seed, 0x1c));
  for (int r = 0; r < options.restarts && !tight(best); ++r) {
    JointAngles start{};
    for (int i = 0; i < kNumJoints; ++i) {
      std::uniform_real_distribution<double> dist(chain.joints[i].min_rad, chain.joints[i].max_rad);
      start[i] = dist(rng);
    }
    IkResult attempt = Solve(chain, target, start, options);
    attempt.iterations += best.iterations;
    if (Better(attempt, best)) {
      best = attempt;
    } else {
      best.iterations = attempt.iterations;
    }
  }
  return best;
}

std::array<int, kNumJoints> AnglesToPwm(const JointAngles& q, const ServoCalib& calib) {
  std::array<int, kNumJoints> ticks{};
  for (int i = 0; i < kNumJoints; ++i) {
    const double angle = std::clamp(calib.zero_offset_rad[i] + calib.direction[i] * q[i], 0.0,
                                    calib.angle_range_rad);
    const double pulse = calib.pulse_min_us +
                         angle / calib.angle_range_rad * (calib.pulse_max_us - calib.pulse_min_us);
    const long tick = std::lround(pulse / calib.frame_us * calib.resolution);
    ticks[i] = static_cast<int>(std::clamp<long>(tick, 0, calib.resolution - 1));
  }
  return ticks;
}

double EeSpeedCheck(const KinematicChain& chain, std::span<const JointAngles> trajectory,
                    double dt) {
  if (trajectory.size() < 2) throw ConfigError("speed check needs at least two waypoints");
  if (!(dt > 0.0)) throw ConfigError("speed check needs dt > 0");
  double fastest = 0.0;
  Eigen::Vector3d prev = Fk(chain, trajectory[0]).position_mm;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const Eigen::Vector3d cur = Fk(chain, trajectory[i]).position_mm;
    fastest = std::max(fastest, (cur - prev).norm() * 1e-3 / dt);
    prev = cur;
  }
  return fastest;
}

}  // namespace chunkrt
