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

#ifndef CHUNKRT_HARNESS_COMMANDS_HPP_
#define CHUNKRT_HARNESS_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "chunkrt/dataset.hpp"
#include "chunkrt/harness/config.hpp"
#include "chunkrt/harness/results.hpp"
#include "chunkrt/policy.hpp"
#include "chunkrt/sim.hpp"

namespace chunkrt::harness {

struct CommandOptions {
  bool force = false;
  std::ostream* log = nullptr;  // progress / summary output, may be null
};

// gen-data: writes the dataset to config.DataDir().
DatasetManifest RunGenData(const ExperimentConfig& config, const CommandOptions& options);

struct TrainSummary {
  int samples = 0;
  int iterations = 0;
  LossBreakdown initial;  // full-dataset loss of the untrained network
  LossBreakdown final;    // full-dataset loss after training
};

// train: writes the checkpoint, train_loss.csv and train_summary.json.
// Refuses to replace an existing checkpoint unless options.force.
TrainSummary RunTrain(const ExperimentConfig& config, const CommandOptions& options);

struct EpisodeRecord {
  std::string condition;
  std::string method;
  int episode = 0;
  std::uint64_t seed = 0;
  int instruction_id = 0;
  EpisodeResult result;
};

struct SuiteSpec {
  std::vector<std::string> conditions;
  std::vector<std::string> methods;
  int episodes = 0;  // per cell
  double actuation_noise = 0.0;
  bool log_pwm = false;
  // Adds one pooled row per method over all conditions, labelled "suite".
  bool pooled_rows = false;
};

struct SuiteRun {
  std::vector<EpisodeRecord> episodes;  // condition-major, then method, episode
  ResultsTable table;
};

// Seed of episode i under a condition; identical for every method.
std::uint64_t EpisodeSeed(std::uint64_t seed, PerturbMode mode, int episode);

// Runs the (condition x method x episode) grid on config.jobs threads.
SuiteRun RunSuite(const PolicyNet& net, const ExperimentConfig& config, const SuiteSpec& suite);

// Writes results.csv, results.md, episodes.log and config.echo into config.out.
void WriteSuiteOutputs(const SuiteRun& run, const ExperimentConfig& config,
                       const std::string& title);

// eval: five-condition grid for the configured methods.
SuiteRun RunEval(const ExperimentConfig& config, const CommandOptions& options);
// bench-ensemblers: every configured ensembler on the noisy / OOD suite.
SuiteRun RunBenchEnsemblers(const ExperimentConfig& config, const CommandOptions& options);

struct TimingStats {
  int iterations = 0;
  double median_ns = 0.0;
  double p99_ns = 0.0;
  double mean_horizon = 0.0;
};

struct LatencyReport {
  TimingStats forward;
  std::map<std::string, TimingStats> ensemblers;  // by method name
  TimingStats always_min;                         // adahorizon forced to min_actions
  TimingStats always_max;                         // adahorizon forced to K
  double min_rate = 0.0;  // actions/s at horizon min_actions
  double max_rate = 0.0;  // actions/s at horizon K
  double span_ratio = 0.0;
};

// bench-latency: wall-clock timings, written to latency.csv / latency.md.
LatencyReport RunBenchLatency(const ExperimentConfig& config, const CommandOptions& options);

struct IkReport {
  double wrist_reach_mm = 0.0;
  double tip_reach_mm = 0.0;
  std::array<int, 3> ticks{};  // joint 0 at 0, pi/2, pi
  int targets = 0;
  int converged = 0;
  double worst_position_error_mm = 0.0;
  double worst_orientation_error_rad = 0.0;
  double mean_iterations = 0.0;
  bool probe_unreachable = false;
  std::string probe_message;
};

// ik-check: FK/IK round trip, reach and PWM checks, written to ik_report.*.
IkReport RunIkCheck(const ExperimentConfig& config, const CommandOptions& options);

}  // namespace chunkrt::harness

#endif  // CHUNKRT_HARNESS_COMMANDS_HPP_
