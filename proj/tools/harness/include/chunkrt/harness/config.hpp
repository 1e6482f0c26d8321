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

#ifndef CHUNKRT_HARNESS_CONFIG_HPP_
#define CHUNKRT_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chunkrt/ensemble.hpp"
#include "chunkrt/policy.hpp"
#include "chunkrt/sim.hpp"

namespace chunkrt::harness {

struct PathsSection {
  std::string data;        // empty: <out>/data
  std::string checkpoint;  // empty: <out>/policy.ckpt
};

struct DatasetSection {
  int count = 1200;
  std::vector<int> task_mix;  // empty: all templates
  // Per-axis std (m) on the expert's executed moves while recording.
  double actuation_noise = 0.004;
  double noisy_fraction = 0.5;  // share of demos recorded with that noise
};

struct EvalSection {
  int episodes = 50;  // per (condition, method) cell
  std::vector<std::string> conditions = {"original", "static_distractors",
                                         "dynamic_distractor", "ood_task", "ood_env"};
  std::vector<std::string> methods = {"adahorizon", "fixed_disc", "fixed_cont"};
  bool log_pwm = true;
};

// The noisy / OOD comparison suite.
struct BenchSection {
  int episodes = 60;  // per (condition, method) cell
  std::vector<std::string> conditions = {"static_distractors", "dynamic_distractor",
                                         "ood_task", "ood_env"};
  std::vector<std::string> methods = {"temporal",   "confidence_fusion", "similarity",
                                      "fixed_cont", "fixed_disc",        "adahorizon"};
  double actuation_noise = 0.004;
};

struct LatencySection {
  int iterations = 10000;
  int warmup = 100;
  int forward_iterations = 2000;
};

struct KinematicsSection {
  std::string chain;  // empty: built-in default chain
  int targets = 1000;
  double probe_mm = 500.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "out";
  PathsSection paths;
  DatasetSection dataset;
  PolicyShape shape;
  TrainConfig train;
  EnsemblerConfig ensembler;
  SimConfig sim;
  PerturbSpec perturb;  // mode is set per condition
  EvalSection eval;
  BenchSection bench;
  LatencySection latency;
  KinematicsSection kinematics;

  std::filesystem::path DataDir() const;
  std::filesystem::path CheckpointPath() const;

  // Throws ConfigError on any invalid value.
  void Validate() const;
};

// Missing keys keep their defaults; unknown keys and wrong types raise
// ConfigError naming the offending key.
ExperimentConfig ConfigFromJsonText(const std::string& text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
// Complete effective config; ConfigFromJsonText(ConfigToJsonText(c)) == c.
std::string ConfigToJsonText(const ExperimentConfig& config);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

void ApplyOverrides(ExperimentConfig& config, const Overrides& overrides);

}  // namespace chunkrt::harness

#endif  // CHUNKRT_HARNESS_CONFIG_HPP_
