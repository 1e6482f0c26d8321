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

#ifndef CHUNKRT_ENSEMBLE_HPP_
#define CHUNKRT_ENSEMBLE_HPP_

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "chunkrt/actionspace.hpp"

namespace chunkrt {

// Both heads' predictions for one inference.
struct DualChunk {
  ActionChunk cont;  // continuous head, raw action units
  ActionChunk disc;  // discrete head, dequantized
  std::vector<double> disc_conf;  // per-step mean max softmax probability

  int size() const { return cont.size(); }
  // Throws ConfigError on mismatched lengths or out-of-range confidences.
  void Validate() const;
};

struct AdaHorizonParams {
  int min_actions = 4;
  double threshold = 0.06;          // per-step MAD cutoff for extending
  double replan_threshold = 0.12;   // MAD cutoff that counts a replan event
  int max_replan_count = 5;
  int next_task_thresh = 3;
  // Off by default: the counter otherwise only grows.
  bool reset_on_full_horizon = false;

  // Throws ConfigError unless 1 <= min_actions <= chunk_length and both
  // thresholds are positive.
  void Validate(int chunk_length) const;
};

struct TimedChunk {
  DualChunk chunk;
  std::int64_t emitted_at = 0;
};

struct EnsemblerState {
  int replan_ctr = 0;
  int max_replan_ctr = 0;
  // Most recent last; read only by the smoothing baselines.
  std::deque<TimedChunk> history;

  void Reset() { *this = EnsemblerState{}; }
};

// mad[t] = mean_d |norm(cont[t])[d] - norm(disc[t])[d]|.
std::vector<double> MadPerStep(const DualChunk& chunk, const NormStats& stats);

struct AdaHorizonOutput {
  ActionChunk executed;  // discrete-head prefix
  std::vector<double> mad;
  int horizon = 0;
  bool escape = false;        // counter limits reached, full chunk returned
  bool replan_event = false;  // replan_ctr was incremented this call
};

// Adaptive horizon ensembler. Executes a prefix of the discrete chunk: at
// least min_actions steps, extended while the heads agree to within
// `threshold`. Replan events (early disagreement above replan_threshold)
// are counted, and once the counters pass their limits the whole discrete
// chunk is returned. Throws ConfigError("chunk shorter than min horizon").
AdaHorizonOutput AdaHorizonStep(const DualChunk& chunk,
                                const AdaHorizonParams& params,
                                EnsemblerState& state, const NormStats& stats);

// Exponentially weighted average over every stored prediction for
// `timestep`, weight exp(-decay * age). Continuous head, one action per call.
// Pushes `chunk` into the state's history.
Action TemporalEnsembleStep(const DualChunk& chunk, EnsemblerState& state,
                            double decay, std::int64_t timestep,
                            int history_depth);

// Whole discrete chunk when mean(disc_conf) >= theta, else continuous.
ActionChunk ConfidenceFusionStep(const DualChunk& chunk, double theta);

// Historical continuous predictions for `timestep` weighted by
// max(0, cos(pred, current)), current weighted 1. One action per call.
Action SimilarityEnsembleStep(const DualChunk& chunk, EnsemblerState& state,
                              std::int64_t timestep, int history_depth);

// Full chunk from one head.
ActionChunk FixedHorizonStep(const DualChunk& chunk, bool use_discrete);

enum class EnsemblerKind {
  kTemporal,
  kConfidenceFusion,
  kSimilarity,
  kFixedContinuous,
  kFixedDiscrete,
  kAdaHorizon,
};

std::string_view ToString(EnsemblerKind kind);
// Throws ConfigError on unknown names.
EnsemblerKind ParseEnsemblerKind(std::string_view name);
// All six, in reporting order.
std::vector<EnsemblerKind> AllEnsemblerKinds();

struct EnsemblerConfig {
  EnsemblerKind kind = EnsemblerKind::kAdaHorizon;
  AdaHorizonParams adahorizon;
  double temporal_decay = 0.01;
  double confidence_theta = 0.8;
  int history_depth = 0;  // 0 = chunk length
};

struct EnsembleDecision {
  ActionChunk actions;
  std::vector<double> mad;
  int horizon = 0;
  bool escape = false;
};

// Uniform front for the episode runner. Single owner per episode.
class Ensembler {
 public:
  Ensembler(EnsemblerConfig config, NormStats stats);

  EnsembleDecision Step(const DualChunk& chunk, std::int64_t timestep);
  void Reset() { state_.Reset(); }

  const EnsemblerConfig& config() const { return config_; }
  const EnsemblerState& state() const { return state_; }

 private:
  EnsemblerConfig config_;
  NormStats stats_;
  EnsemblerState state_;
};

}  // namespace chunkrt

#endif  // CHUNKRT_ENSEMBLE_HPP_
