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

#include "chunkrt/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "chunkrt/error.hpp"
#include "chunkrt/noise.hpp"

namespace chunkrt {
namespace {

// Noise streams derived from the episode seed.
constexpr std::uint64_t kResetStream = 1;
constexpr std::uint64_t kActuationStream = 2;
constexpr std::uint64_t kObservationStream = 3;

// Static distractors are scattered over the clutter area around the spawn
// regions, at least kClearance away from the task object and its goal.
constexpr Box kClutterArea = {{0.16, -0.13, 0.0}, {0.29, 0.13, 0.0}};
constexpr double kClearance = 0.03;
constexpr double kDynamicLateralJitter = 0.03;

double HorizontalDistance(const Vec3& a, const Vec3& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double Distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

double MaxAbsDiff(const Vec3& a, const Vec3& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

Vec3 SampleIn(const Box& box, const CounterNoise& noise, std::uint64_t& channel) {
  Vec3 p{};
  for (int i = 0; i < 3; ++i) {
    p[i] = box.lo[i] + noise.Uniform(0, channel++) * (box.hi[i] - box.lo[i]);
  }
  return p;
}

double TriangleWave(double s, double amplitude) {
  if (amplitude <= 0.0) return 0.0;
  const double period = 4.0 * amplitude;
  double u = std::fmod(s, period);
  if (u < 0.0) u += period;
  if (u < amplitude) return u;
  if (u < 3.0 * amplitude) return 2.0 * amplitude - u;
  return u - 4.0 * amplitude;
}

Vec3 PathPosition(const SimObject& o, int step) {
  const double offset = TriangleWave(o.path_phase + o.path_speed * step, o.path_amplitude);
  return {o.path_origin[0] + offset * o.path_dir[0], o.path_origin[1] + offset * o.path_dir[1],
          o.path_origin[2] + offset * o.path_dir[2]};
}

// Straight-line step toward `target`, at most `limit` long; lands exactly on
// the target once within reach.
Vec3 StepToward(const Vec3& from, const Vec3& target, double limit) {
  const Vec3 err = {target[0] - from[0], target[1] - from[1], target[2] - from[2]};
  const double dist = std::sqrt(err[0] * err[0] + err[1] * err[1] + err[2] * err[2]);
  if (dist < 1e-12) return {};
  const double scale = std::min(1.0, limit / dist);
  return {err[0] * scale, err[1] * scale, err[2] * scale};
}

Action MoveAction(const Vec3& delta, double grip) {
  Action a;
  a[kDx] = delta[0];
  a[kDy] = delta[1];
  a[kDz] = delta[2];
  a[kGrip] = grip;
  return a;
}

Vec3 TransportTarget(const WorldState& s, const SimConfig& config) {
  // Clamped so a large grasp offset near the workspace edge cannot make the
  // hover point unreachable.
  const SimObject& obj = s.task_object();
  const Vec3 target = {s.goal[0] - obj.grasp_offset[0], s.goal[1] - obj.grasp_offset[1],
                       config.hover_height};
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    out[i] = std::clamp(target[i], config.workspace.lo[i], config.workspace.hi[i]);
  }
  return out;
}

}  // namespace

std::string_view ToString(ObjectClass c) {
  switch (c) {
    case ObjectClass::kBlock: return "block";
    case ObjectClass::kBall: return "ball";
    case ObjectClass::kRock: return "rock";
  }
  return "unknown";
}

std::string_view ToString(Placement p) {
  switch (p) {
    case Placement::kAway: return "away";
    case Placement::kLeft: return "left";
    case Placement::kRight: return "right";
  }
  return "unknown";
}

ObjectClass ParseObjectClass(std::string_view name) {
  for (ObjectClass c : {ObjectClass::kBlock, ObjectClass::kBall, ObjectClass::kRock}) {
    if (ToString(c) == name) return c;
  }
  throw ConfigError("unknown object class '" + std::string(name) + "'");
}

Placement ParsePlacement(std::string_view name) {
  for (Placement p : {Placement::kAway, Placement::kLeft, Placement::kRight}) {
    if (ToString(p) == name) return p;
  }
  throw ConfigError("unknown placement '" + std::string(name) + "'");
}

TaskSpec TaskSpec::FromInstruction(int instruction_id) {
  if (instruction_id < 0 || instruction_id >= kNumInstructions) {
    throw ConfigError("instruction id " + std::to_string(instruction_id) + " out of range");
  }
  TaskSpec task;
  task.instruction_id = instruction_id;
  task.object_class = static_cast<ObjectClass>(instruction_id / 3);
  task.placement = static_cast<Placement>(instruction_id % 3);
  return task;
}

std::string TaskSpec::InstructionText() const {
  std::string text = "pick up the " + std::string(ToString(object_class)) + " and place it ";
  switch (placement) {
    case Placement::kAway: return text + "away from the robot";
    case Placement::kLeft: return text + "to the left";
    case Placement::kRight: return text + "to the right";
  }
  return text;
}

std::string_view ToString(PerturbMode mode) {
  switch (mode) {
    case PerturbMode::kNone: return "original";
    case PerturbMode::kStaticDistractors: return "static_distractors";
    case PerturbMode::kDynamicDistractor: return "dynamic_distractor";
    case PerturbMode::kOodTask: return "ood_task";
    case PerturbMode::kOodEnv: return "ood_env";
  }
  return "unknown";
}

PerturbMode ParsePerturbMode(std::string_view name) {
  for (PerturbMode m : {PerturbMode::kNone, PerturbMode::kStaticDistractors,
                        PerturbMode::kDynamicDistractor, PerturbMode::kOodTask,
                        PerturbMode::kOodEnv}) {
    if (ToString(m) == name) return m;
  }
  if (name == "none") return PerturbMode::kNone;
  throw ConfigError("unknown perturbation mode '" + std::string(name) + "'");
}

void PerturbSpec::Validate() const {
  if (mode == PerturbMode::kStaticDistractors && distractor_count < 1) {
    throw ConfigError("static_distractors needs distractor_count >= 1");
  }
  if (mode == PerturbMode::kDynamicDistractor && !(motion_amplitude > 0.0 && motion_speed > 0.0)) {
    throw ConfigError("dynamic_distractor needs positive motion amplitude and speed");
  }
  if (mode == PerturbMode::kOodEnv &&
      std::hypot(env_shift[0], env_shift[1]) <= 0.0) {
    throw ConfigError("ood_env needs a non-zero env_shift");
  }
  if (distractor_count < 0 || occlusion_radius < 0.0 || occlusion_noise < 0.0 ||
      actuation_noise < 0.0) {
    throw ConfigError("perturbation parameters must be non-negative");
  }
}

void SimConfig::Validate() const {
  if (!(dt > 0.0)) throw ConfigError("sim dt must be > 0");
  if (episode_cap < 1) throw ConfigError("episode_cap must be >= 1");
  if (!(max_speed > 0.0)) throw ConfigError("max_speed must be > 0");
  if (!(grasp_radius > 0.0 && goal_radius > 0.0)) throw ConfigError("radii must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (!(workspace.lo[i] <= workspace.hi[i])) throw ConfigError("workspace box is inverted");
  }
  if (!(expert_step > 0.0) || expert_step > max_step() + 1e-12) {
    throw ConfigError("expert_step must be positive and within the speed clamp");
  }
}

Box SpawnRegion(ObjectClass c) {
  switch (c) {
    case ObjectClass::kBlock: return {{0.21, -0.06, 0.0}, {0.25, -0.03, 0.0}};
    case ObjectClass::kBall: return {{0.21, -0.015, 0.0}, {0.25, 0.015, 0.0}};
    case ObjectClass::kRock: return {{0.21, 0.03, 0.0}, {0.25, 0.06, 0.0}};
  }
  return {};
}

Vec3 PlacementOffset(Placement p) {
  switch (p) {
    case Placement::kAway: return {0.04, 0.0, 0.0};
    case Placement::kLeft: return {0.0, 0.07, 0.0};
    case Placement::kRight: return {0.0, -0.07, 0.0};
  }
  return {};
}

WorldState Reset(const TaskSpec& task, const PerturbSpec& perturb, std::uint64_t seed,
                 const SimConfig& config) {
  config.Validate();
  perturb.Validate();
  if (task.object_id != 0) throw ConfigError("task object_id must be 0");
  const TaskSpec checked = TaskSpec::FromInstruction(task.instruction_id);
  if (checked.object_class != task.object_class || checked.placement != task.placement) {
    throw ConfigError("task class/placement disagree with instruction id");
  }

  WorldState s;
  s.task = task;
  s.perturb = perturb;
  s.seed = seed;
  s.goal_radius = config.goal_radius;

  const CounterNoise noise(DeriveSeed(seed, kResetStream));
  std::uint64_t channel = 0;
  s.ee_pos = config.home;
  for (int i = 0; i < 2; ++i) {
    s.ee_pos[i] += config.home_jitter * (2.0 * noise.Uniform(0, channel++) - 1.0);
  }

  ObjectClass spawn_class = task.object_class;
  if (perturb.mode == PerturbMode::kOodTask) {
    // Instruction for one class, object in another class's spawn area.
    spawn_class = static_cast<ObjectClass>((static_cast<int>(task.object_class) + 1) % 3);
  }
  Box region = SpawnRegion(spawn_class);
  if (perturb.mode == PerturbMode::kOodEnv) {
    for (int i = 0; i < 3; ++i) {
      region.lo[i] += perturb.env_shift[i];
      region.hi[i] += perturb.env_shift[i];
    }
  }
  SimObject target;
  target.id = 0;
  target.object_class = task.object_class;
  target.pos = SampleIn(region, noise, channel);
  s.objects.push_back(target);

  const Vec3 offset = PlacementOffset(task.placement);
  s.goal = {target.pos[0] + offset[0], target.pos[1] + offset[1], 0.0};

  if (perturb.mode == PerturbMode::kStaticDistractors) {
    for (int k = 0; k < perturb.distractor_count; ++k) {
      SimObject d;
      d.id = k + 1;
      d.object_class = static_cast<ObjectClass>((static_cast<int>(task.object_class) + 1 + k) % 3);
      d.distractor = true;
      // Rejection sampling; the channel counter keeps it deterministic.
      for (int attempt = 0; attempt < 64; ++attempt) {
        d.pos = SampleIn(kClutterArea, noise, channel);
        if (HorizontalDistance(d.pos, target.pos) >= kClearance &&
            HorizontalDistance(d.pos, s.goal) >= kClearance) {
          break;
        }
      }
      s.objects.push_back(d);
    }
  } else if (perturb.mode == PerturbMode::kDynamicDistractor) {
    SimObject d;
    d.id = 1;
    d.distractor = true;
    d.dynamic = true;
    d.path_origin = {target.pos[0] + kDynamicLateralJitter * (2.0 * noise.Uniform(0, channel++) - 1.0),
                     target.pos[1], 0.0};
    d.path_dir = {0.0, 1.0, 0.0};
    d.path_amplitude = perturb.motion_amplitude;
    d.path_speed = perturb.motion_speed;
    d.path_phase = 4.0 * perturb.motion_amplitude * noise.Uniform(0, channel++);
    d.pos = PathPosition(d, 0);
    s.objects.push_back(d);
  }
  return s;
}

WorldState Step(const WorldState& state, const Action& a, const SimConfig& config) {
  WorldState next = state;
  Vec3 delta = {a[kDx], a[kDy], a[kDz]};
  if (state.perturb.actuation_noise > 0.0) {
    const CounterNoise noise(DeriveSeed(state.seed, kActuationStream));
    for (int i = 0; i < 3; ++i) {
      delta[i] += state.perturb.actuation_noise * noise.Gaussian(state.step, i);
    }
  }
  const double norm = std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]);
  if (norm > config.max_step()) {
    for (double& d : delta) d *= config.max_step() / norm;
  }
  for (int i = 0; i < 3; ++i) {
    next.ee_pos[i] = std::clamp(state.ee_pos[i] + delta[i], config.workspace.lo[i],
                                config.workspace.hi[i]);
    next.ee_euler[i] = state.ee_euler[i] + a[kRx + i];
  }
  for (SimObject& o : next.objects) {
    if (!o.held) continue;
    for (int i = 0; i < 3; ++i) o.pos[i] = next.ee_pos[i] + o.grasp_offset[i];
  }

  const bool was_closed = state.grip >= kGripThreshold;
  const bool closed = a.GripClosed();
  if (!was_closed && closed) {
    SimObject* nearest = nullptr;
    double best = config.grasp_radius;
    for (SimObject& o : next.objects) {
      if (o.dynamic || o.held) continue;
      const double dist = Distance(o.pos, next.ee_pos);
      if (dist <= best) {
        best = dist;
        nearest = &o;
      }
    }
    if (nearest != nullptr) {
      nearest->held = true;
      for (int i = 0; i < 3; ++i) nearest->grasp_offset[i] = nearest->pos[i] - next.ee_pos[i];
    }
  } else if (was_closed && !closed) {
    // Released objects drop straight onto the table.
    for (SimObject& o : next.objects) {
      if (!o.held) continue;
      o.held = false;
      o.grasp_offset = {};
      o.pos[2] = 0.0;
    }
  }
  next.grip = closed ? 1.0 : 0.0;

  ++next.step;
  for (SimObject& o : next.objects) {
    if (o.dynamic) o.pos = PathPosition(o, next.step);
  }
  return next;
}

Observation Observe(const WorldState& state) {
  Observation obs;
  obs.ee_pos = state.ee_pos;
  obs.ee_euler = state.ee_euler;
  obs.grip_state = state.grip;
  obs.object_pos = state.task_object().pos;
  obs.goal_pos = state.goal;
  obs.instruction_id = state.task.instruction_id;

  const SimObject& target = state.task_object();
  if (!target.held && state.perturb.occlusion_noise > 0.0) {
    const bool occluded = std::any_of(state.objects.begin() + 1, state.objects.end(),
                                      [&](const SimObject& o) {
                                        return HorizontalDistance(o.pos, target.pos) <
                                               state.perturb.occlusion_radius;
                                      });
    if (occluded) {
      const CounterNoise noise(DeriveSeed(state.seed, kObservationStream));
      for (int i = 0; i < 3; ++i) {
        obs.object_pos[i] += state.perturb.occlusion_noise * noise.Gaussian(state.step, i);
      }
    }
  }
  return obs;
}

bool IsSuccess(const WorldState& state, const SimConfig& config) {
  const SimObject& target = state.task_object();
  return !target.held && HorizontalDistance(target.pos, state.goal) <= state.goal_radius &&
         state.step <= config.episode_cap;
}

ExpertPhase CurrentPhase(const WorldState& state, const SimConfig& config) {
  const SimObject& target = state.task_object();
  if (target.held) {
    return MaxAbsDiff(state.ee_pos, TransportTarget(state, config)) <= config.place_tolerance
               ? ExpertPhase::kOpenGrip
               : ExpertPhase::kTransport;
  }
  if (state.grip >= kGripThreshold) return ExpertPhase::kRecover;
  if (HorizontalDistance(state.ee_pos, target.pos) <= config.align_radius) {
    return MaxAbsDiff(state.ee_pos, target.pos) <= config.grasp_tolerance
               ? ExpertPhase::kCloseGrip
               : ExpertPhase::kDescend;
  }
  return ExpertPhase::kApproach;
}

Action ScriptedExpert(const WorldState& state, const SimConfig& config) {
  const SimObject& target = state.task_object();
  switch (CurrentPhase(state, config)) {
    case ExpertPhase::kApproach: {
      const Vec3 above = {target.pos[0], target.pos[1], config.hover_height};
      return MoveAction(StepToward(state.ee_pos, above, config.expert_step), 0.0);
    }
    case ExpertPhase::kDescend:
      return MoveAction(StepToward(state.ee_pos, target.pos, config.expert_step), 0.0);
    case ExpertPhase::kCloseGrip:
      return MoveAction({}, 1.0);
    case ExpertPhase::kTransport:
      return MoveAction(
          StepToward(state.ee_pos, TransportTarget(state, config), config.expert_step), 1.0);
    case ExpertPhase::kOpenGrip:
    case ExpertPhase::kRecover:
      return MoveAction({}, 0.0);
  }
  return {};
}

EpisodeResult RunEpisode(const ChunkPolicy& policy, const NormStats& stats,
                         const EpisodeSpec& spec) {
  if (spec.log_pwm && spec.chain == nullptr) throw ConfigError("log_pwm needs a kinematic chain");
  WorldState state = Reset(spec.task, spec.perturb, spec.seed, spec.sim);
  Ensembler ensembler(spec.ensembler, stats);
  EpisodeResult result;

  IkOptions ik_options;
  ik_options.position_only = true;
  ik_options.restarts = 8;
  ik_options.seed = spec.seed;
  JointAngles q{0.0, 0.6, 1.2, 0.0, 1.2, 0.0};
  bool warm = false;

  using Clock = std::chrono::steady_clock;
  while (!IsSuccess(state, spec.sim) && state.step < spec.sim.episode_cap) {
    const Observation obs = Observe(state);
    const auto start = Clock::now();
    const DualChunk chunk = policy(obs);
    const EnsembleDecision decision = ensembler.Step(chunk, state.step);
    const auto stop = Clock::now();
    result.inference_ns.push_back(
        std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
    ++result.inferences;

    ChunkRecord record;
    record.horizon = decision.horizon;
    record.escape = decision.escape;
    record.mad = decision.mad;
    if (!decision.mad.empty()) {
      double sum = 0.0;
      for (double m : decision.mad) sum += m;
      record.mean_mad = sum / static_cast<double>(decision.mad.size());
    }
    result.chunks.push_back(std::move(record));

    for (const Action& planned : decision.actions.actions) {
      Action command = planned;
      command[kGrip] = planned.GripClosed() ? 1.0 : 0.0;
      state = Step(state, command, spec.sim);
      if (spec.log_pwm) {
        Pose target;
        for (int i = 0; i < 3; ++i) target.position_mm[i] = state.ee_pos[i] * 1000.0;
        ik_options.restarts = warm ? 0 : 8;
        try {
          const IkResult ik = Ik(*spec.chain, target, q, ik_options);
          if (ik.converged) {
            q = ik.q;
            warm = true;
          } else {
            ++result.ik_failures;
          }
        } catch (const UnreachableError&) {
          ++result.ik_failures;
        }
        result.pwm.push_back(AnglesToPwm(q, spec.chain->servo));
      }
      if (IsSuccess(state, spec.sim) || state.step >= spec.sim.episode_cap) break;
    }
  }
  result.success = IsSuccess(state, spec.sim);
  result.steps = state.step;
  return result;
}

EpisodeResult RunEpisode(const PolicyNet& net, const EpisodeSpec& spec) {
  return RunEpisode([&net](const Observation& obs) { return net.Forward(obs); }, net.stats(),
                    spec);
}

}  // namespace chunkrt
