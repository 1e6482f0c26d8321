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

#ifndef CHUNKRT_KINEMATICS_HPP_
#define CHUNKRT_KINEMATICS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Geometry>

namespace chunkrt {

inline constexpr int kNumJoints = 6;
inline constexpr double kMaxEeSpeed = 0.7;  // m/s

enum class JointAxis { kRoll, kPitch };  // roll: local z, pitch: local y

struct JointSpec {
  JointAxis axis = JointAxis::kRoll;
  Eigen::Vector3d offset_mm = Eigen::Vector3d::Zero();  // to the next joint
  double min_rad = 0.0;
  double max_rad = 0.0;
};

// Hobby servo driven by a 12-bit PWM generator at 50 Hz.
struct ServoCalib {
  double pulse_min_us = 500.0;
  double pulse_max_us = 2500.0;
  double angle_range_rad = 3.14159265358979323846;
  double frame_us = 20000.0;
  int resolution = 4096;
  // servo_angle = zero_offset + direction * q, clamped to [0, angle_range].
  std::array<double, kNumJoints> zero_offset_rad{};
  std::array<double, kNumJoints> direction{1, 1, 1, 1, 1, 1};

  void Validate() const;
};

using JointAngles = std::array<double, kNumJoints>;

struct KinematicChain {
  std::array<JointSpec, kNumJoints> joints;
  Eigen::Vector3d gripper_offset_mm = Eigen::Vector3d::Zero();
  int wrist_joint = 4;  // wrist point = origin of this joint's frame
  ServoCalib servo;

  // Roll-pitch-pitch-roll-pitch-roll arm, fully extended along +z at q = 0:
  // 107 + 130 + 130 + 15 = 382 mm to the wrist, + 78 mm gripper = 460 mm.
  static KinematicChain Default();

  // Axis pattern and limit ordering. Throws ConfigError.
  void Validate() const;

  bool WithinLimits(const JointAngles& q) const;
  JointAngles Clamp(JointAngles q) const;

  double WristReachMm() const;
  double TipReachMm() const;

  // JSON: {"joints": [{"axis", "offset_mm", "limits_rad"}...],
  //        "gripper_offset_mm", "wrist_joint", "servo": {...}}
  static KinematicChain FromJsonText(const std::string& text);
  static KinematicChain Load(const std::filesystem::path& path);
  std::string ToJsonText() const;
};

struct Pose {
  Eigen::Vector3d position_mm = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

// Gripper-tip pose.
Pose Fk(const KinematicChain& chain, const JointAngles& q);
Eigen::Vector3d WristPosition(const KinematicChain& chain, const JointAngles& q);

struct IkOptions {
  int max_iterations = 200;
  double damping = 0.01;
  // Weights orientation error (rad) against position error (mm).
  double orientation_weight_mm = 100.0;
  bool position_only = false;
  double position_tolerance_mm = 1.0;
  double orientation_tolerance_rad = 0.01;
  // Random restarts tried while the best error is above 1% of the tolerances;
  // deterministic in `seed`.
  int restarts = 128;
  std::uint64_t seed = 0;
};

struct IkResult {
  JointAngles q{};
  bool converged = false;
  double position_error_mm = 0.0;
  double orientation_error_rad = 0.0;
  int iterations = 0;
};

// Damped least squares on the pose error with a central-difference Jacobian.
// Throws UnreachableError when the target lies beyond the tip reach.
IkResult Ik(const KinematicChain& chain, const Pose& target, const JointAngles& q0,
            const IkOptions& options = {});

// Rotation-vector angle between two orientations.
double OrientationError(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

// pulse_us = pulse_min + servo_angle / range * (pulse_max - pulse_min);
// tick = round(pulse_us / frame_us * resolution), clamped to the resolution.
std::array<int, kNumJoints> AnglesToPwm(const JointAngles& q, const ServoCalib& calib);

// Max Cartesian tip speed (m/s) between consecutive waypoints. Throws
// ConfigError with fewer than two waypoints or dt <= 0.
double EeSpeedCheck(const KinematicChain& chain, std::span<const JointAngles> trajectory,
                    double dt);

}  // namespace chunkrt

#endif  // CHUNKRT_KINEMATICS_HPP_
