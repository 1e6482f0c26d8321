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

#ifndef CHUNKRT_DATASET_HPP_
#define CHUNKRT_DATASET_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chunkrt/actionspace.hpp"
#include "chunkrt/policy.hpp"
#include "chunkrt/sim.hpp"

namespace chunkrt {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr const char* kExpertVersion = "scripted-expert/1";

struct Frame {
  Observation obs;
  Action action;
  // Noisy demos only: the expert's noise-free continuation from this frame's
  // state, plan[0] == action, padded with its last action after success.
  std::vector<Action> plan;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Demonstration {
  std::string instruction;
  int instruction_id = 0;
  std::vector<Frame> frames;
  std::uint64_t seed = 0;
  TaskSpec task;
  std::string expert_version = kExpertVersion;

  // Throws FormatError on empty frames, non-finite values, a non-binary grip
  // or an instruction that does not match its id.
  void Validate() const;

  friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  int count = 0;
  std::array<int, kNumInstructions> per_task{};
  std::uint64_t seed = 0;
  std::string norm_stats_file = "norm_stats.txt";
  std::string demos_file = "demos.jsonl";
};

struct Dataset {
  DatasetManifest manifest;
  NormStats stats;
  std::vector<Demonstration> demos;

  std::vector<Action> AllActions() const;
};

struct GenerateOptions {
  int count = 1200;
  std::uint64_t seed = 0;
  // Instruction ids cycled round-robin; empty means all templates.
  std::vector<int> task_mix;
  SimConfig sim;
  double actuation_noise = 0.0;  // see RecordDemonstration
  // Share of demos recorded with actuation noise, spread evenly over the
  // indices: demo i is noisy when floor((i + 1) * f) > floor(i * f).
  double noisy_fraction = 1.0;
  int plan_length = 8;  // at least the policy's chunk length
  int jobs = 1;
};

// Rolls the scripted expert from Reset(task, none, seed) to success. Throws
// Error if the expert hits the episode cap. With actuation_noise > 0 the
// executed moves are perturbed, so the demos cover recovery from drift, and
// every frame gets a plan of plan_length clean expert actions.
Demonstration RecordDemonstration(const TaskSpec& task, std::uint64_t seed,
                                  const SimConfig& sim = {}, double actuation_noise = 0.0,
                                  int plan_length = 0);

// Demonstration i uses task_mix[i % size] and seed DeriveSeed(seed, i), so the
// output does not depend on `jobs`.
Dataset GenerateDataset(const GenerateOptions& options);

// Layout: manifest.json, norm_stats.txt, demos.jsonl (one record per line).
void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir);
// Throws FormatError naming the record index on a bad record and
// "manifest inconsistent" when counts disagree with the records.
Dataset LoadDataset(const std::filesystem::path& dir);

// Target for frame t is actions t..t+K-1; past the end the final action is
// repeated (its grip included). Frames that carry a plan use its first K
// actions instead; a plan shorter than K is a ConfigError.
std::vector<TrainingSample> Chunkify(const Demonstration& demo, int chunk_length);
std::vector<TrainingSample> ChunkifyAll(const std::vector<Demonstration>& demos,
                                        int chunk_length);

}  // namespace chunkrt

#endif  // CHUNKRT_DATASET_HPP_
