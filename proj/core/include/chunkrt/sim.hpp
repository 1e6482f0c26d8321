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

#ifndef CHUNKRT_SIM_HPP_
#define CHUNKRT_SIM_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "chunkrt/actionspace.hpp"
#include "chunkrt/ensemble.hpp"
#include "chunkrt/kinematics.hpp"
#include "chunkrt/policy.hpp"

namespace chunkrt {

enum class ObjectClass { kBlock, kBall, kRock };
enum class Placement { kAway, kLeft, kRight };

std::string_view ToString(ObjectClass c);
std::string_view ToString(Placement p);
ObjectClass ParseObjectClass(std::string_view name);
Placement ParsePlacement(std::string_view name);

// instruction_id = 3 * class + placement.
struct TaskSpec {
  int instruction_id = 0;
  int object_id = 0;
  Placement placement = Placement::kAway;
  ObjectClass object_class = ObjectClass::kBlock;

  static TaskSpec FromInstruction(int instruction_id);
  std::string InstructionText() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

enum class PerturbMode { kNone, kStaticDistractors, kDynamicDistractor, kOodTask, kOodEnv };

std::string_view ToString(PerturbMode mode);
PerturbMode ParsePerturbMode(std::string_view name);

struct PerturbSpec {
  PerturbMode mode = PerturbMode::kNone;
  int distractor_count = 3;         // static distractors
  double motion_amplitude = 0.12;   // dynamic distractor sweep half-length (m)
  double motion_speed = 0.01;       // dynamic distractor path step (m / tick)
  Vec3 env_shift = {-0.05, 0.0, 0.0};
  // A distractor within this xy radius of the task object corrupts its
  // observed position with Gaussian noise of the given std.
  double occlusion_radius = 0.06;
  double occlusion_noise = 0.015;
  // Per-axis Gaussian std added to every executed translation (m), any mode.
  double actuation_noise = 0.0;

  void Validate() const;
};

struct Box {
  Vec3 lo{};
  Vec3 hi{};
};

struct SimConfig {
  double dt = 0.1;
  int episode_cap = 200;
  double max_speed = kMaxEeSpeed;  // translation clamp, m/s
  double grasp_radius = 0.02;
  double goal_radius = 0.02;
  // Arm base at the origin. Every point of the box is reachable by the
  // default chain within its joint limits (0.16 m to 0.32 m from the base).
  Box workspace = {{0.16, -0.13, 0.0}, {0.29, 0.13, 0.12}};
  double hover_height = 0.08;
  Vec3 home = {0.22, 0.0, 0.08};
  double home_jitter = 0.02;
  // Expert controller.
  double expert_step = 0.01;  // m per tick, straight-line moves
  double align_radius = 0.02;
  double grasp_tolerance = 0.004;
  double place_tolerance = 0.004;

  double max_step() const { return max_speed * dt; }
  void Validate() const;
};

// Training spawn area for one object class.
Box SpawnRegion(ObjectClass c);
Vec3 PlacementOffset(Placement p);

struct SimObject {
  int id = 0;
  ObjectClass object_class = ObjectClass::kBlock;
  Vec3 pos{};
  bool held = false;
  bool distractor = false;
  bool dynamic = false;
  Vec3 grasp_offset{};  // object - ee at grasp time
  // Triangle-wave path for dynamic distractors.
  Vec3 path_origin{};
  Vec3 path_dir{};
  double path_amplitude = 0.0;
  double path_speed = 0.0;
  double path_phase = 0.0;
};

// Index 0 of `objects` is always the task object.
struct WorldState {
  Vec3 ee_pos{};
  Vec3 ee_euler{};
  double grip = 0.0;
  std::vector<SimObject> objects;
  Vec3 goal{};
  double goal_radius = 0.02;
  int step = 0;
  TaskSpec task;
  PerturbSpec perturb;
  std::uint64_t seed = 0;

  const SimObject& task_object() const { return objects.front(); }
};

// Deterministic in `seed`. Throws ConfigError on invalid task / perturb.
WorldState Reset(const TaskSpec& task, const PerturbSpec& perturb, std::uint64_t seed,
                 const SimConfig& config = {});

// One control tick of `a` (grip read as closed when >= 0.5).
WorldState Step(const WorldState& state, const Action& a, const SimConfig& config = {});

// What the policy sees; distractor occlusion adds observation noise.
Observation Observe(const WorldState& state);

bool IsSuccess(const WorldState& state, const SimConfig& config = {});

enum class ExpertPhase { kApproach, kDescend, kCloseGrip, kTransport, kOpenGrip, kRecover };

ExpertPhase CurrentPhase(const WorldState& state, const SimConfig& config = {});

// Five-phase pick-and-place primitive computed from the true state.
Action ScriptedExpert(const WorldState& state, const SimConfig& config = {});

// Any source of dual chunks; a PolicyNet or a test double.
using ChunkPolicy = std::function<DualChunk(const Observation&)>;

struct EpisodeSpec {
  TaskSpec task;
  PerturbSpec perturb;
  std::uint64_t seed = 0;
  EnsemblerConfig ensembler;
  SimConfig sim;
  bool log_pwm = false;
  const KinematicChain* chain = nullptr;  // required when log_pwm is set
};

struct ChunkRecord {
  int horizon = 0;
  double mean_mad = 0.0;
  bool escape = false;
  std::vector<double> mad;
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  int inferences = 0;
  std::vector<ChunkRecord> chunks;
  std::vector<std::int64_t> inference_ns;  // wall clock, forward + ensembler
  std::vector<std::array<int, kNumJoints>> pwm;  // one 6-tuple per tick
  int ik_failures = 0;
};

// observe -> infer -> ensemble -> execute the returned actions one per tick,
// until success or the episode cap.
EpisodeResult RunEpisode(const ChunkPolicy& policy, const NormStats& stats,
                         const EpisodeSpec& spec);
EpisodeResult RunEpisode(const PolicyNet& net, const EpisodeSpec& spec);

}  // namespace chunkrt

#endif  // CHUNKRT_SIM_HPP_
