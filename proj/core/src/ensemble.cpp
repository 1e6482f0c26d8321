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

#include <algorithm>
#include <cmath>

#include "chunkrt/error.hpp"

namespace chunkrt {
namespace {

// Drops entries too old to overlap `timestep`, then appends the new chunk.
void PushHistory(EnsemblerState& state, const DualChunk& chunk,
                 std::int64_t timestep, int depth) {
  while (!state.history.empty() &&
         timestep - state.history.front().emitted_at >= depth) {
    state.history.pop_front();
  }
  while (static_cast<int>(state.history.size()) >= depth) {
    state.history.pop_front();
  }
  state.history.push_back({chunk, timestep});
}

int ResolveDepth(int depth, const DualChunk& chunk) {
  return depth > 0 ? depth : std::max(1, chunk.size());
}

}  // namespace

void DualChunk::Validate() const {
  if (cont.size() != disc.size()) {
    throw ConfigError("dual chunk: heads have different lengths");
  }
  if (!disc_conf.empty() && static_cast<int>(disc_conf.size()) != disc.size()) {
    throw ConfigError("dual chunk: disc_conf length mismatch");
  }
  for (double c : disc_conf) {
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("dual chunk: disc_conf outside [0, 1]");
  }
}

void AdaHorizonParams::Validate(int chunk_length) const {
  if (min_actions < 1) throw ConfigError("min_actions must be >= 1");
  if (min_actions > chunk_length) throw ConfigError("chunk shorter than min horizon");
  if (!(threshold > 0.0)) throw ConfigError("threshold must be > 0");
  if (!(replan_threshold > 0.0)) throw ConfigError("replan_threshold must be > 0");
  if (max_replan_count < 0 || next_task_thresh < 0) {
    throw ConfigError("counter limits must be >= 0");
  }
}

std::vector<double> MadPerStep(const DualChunk& chunk, const NormStats& stats) {
  const int steps = std::min(chunk.cont.size(), chunk.disc.size());
  std::vector<double> mad(steps, 0.0);
  for (int t = 0; t < steps; ++t) {
    const NormalizedAction c = stats.Normalize(chunk.cont[t]);
    const NormalizedAction d = stats.Normalize(chunk.disc[t]);
    double sum = 0.0;
    for (int k = 0; k < kActionDim; ++k) sum += std::abs(c[k] - d[k]);
    mad[t] = sum / kActionDim;
  }
  return mad;
}

AdaHorizonOutput AdaHorizonStep(const DualChunk& chunk,
                                const AdaHorizonParams& params,
                                EnsemblerState& state, const NormStats& stats) {
  const int length = chunk.disc.size();
  if (length < params.min_actions) {
    throw ConfigError("chunk shorter than min horizon");
  }
  AdaHorizonOutput out;
  out.mad = MadPerStep(chunk, stats);

  // Early disagreement counts as a replan event.
  if (params.min_actions > 1) {
    const auto early_end = out.mad.begin() + params.min_actions;
    const bool disagree = std::any_of(out.mad.begin(), early_end, [&](double m) {
      return m > params.replan_threshold;
    });
    if (disagree) {
      ++state.replan_ctr;
      out.replan_event = true;
    }
  }
  state.max_replan_ctr = std::max(state.max_replan_ctr, state.replan_ctr);

  if (state.max_replan_ctr >= params.max_replan_count &&
      state.replan_ctr >= params.next_task_thresh) {
    out.escape = true;
    out.horizon = length;
    out.executed = chunk.disc;
    return out;
  }

  int horizon = params.min_actions;
  for (int t = params.min_actions; t < length; ++t) {
    if (!(out.mad[t] < params.threshold)) break;
    horizon = t + 1;
  }
  if (params.reset_on_full_horizon && horizon == length) state.replan_ctr = 0;

  out.horizon = horizon;
  out.executed = chunk.disc.Prefix(horizon);
  return out;
}

Action TemporalEnsembleStep(const DualChunk& chunk, EnsemblerState& state,
                            double decay, std::int64_t timestep,
                            int history_depth) {
  PushHistory(state, chunk, timestep, ResolveDepth(history_depth, chunk));
  Action sum;
  double total = 0.0;
  for (const TimedChunk& entry : state.history) {
    const std::int64_t age = timestep - entry.emitted_at;
    if (age < 0 || age >= entry.chunk.cont.size()) continue;
    const double w = std::exp(-decay * static_cast<double>(age));
    const Action& p = entry.chunk.cont[static_cast<int>(age)];
    for (int d = 0; d < kActionDim; ++d) sum[d] += w * p[d];
    total += w;
  }
  for (int d = 0; d < kActionDim; ++d) sum[d] /= total;
  return sum;
}

ActionChunk ConfidenceFusionStep(const DualChunk& chunk, double theta) {
  double mean = 0.0;
  for (double c : chunk.disc_conf) mean += c;
  if (!chunk.disc_conf.empty()) mean /= static_cast<double>(chunk.disc_conf.size());
  return mean >= theta ? chunk.disc : chunk.cont;
}

Action SimilarityEnsembleStep(const DualChunk& chunk, EnsemblerState& state,
                              std::int64_t timestep, int history_depth) {
  PushHistory(state, chunk, timestep, ResolveDepth(history_depth, chunk));
  const Action& current = chunk.cont[0];
  double current_norm = 0.0;
  for (double x : current.v) current_norm += x * x;
  current_norm = std::sqrt(current_norm);

  Action sum = current;
  double total = 1.0;
  // The newest history entry is `chunk` itself; it already has weight 1.
  for (std::size_t i = 0; i + 1 < state.history.size(); ++i) {
    const TimedChunk& entry = state.history[i];
    const std::int64_t age = timestep - entry.emitted_at;
    if (age <= 0 || age >= entry.chunk.cont.size()) continue;
    const Action& p = entry.chunk.cont[static_cast<int>(age)];
    double dot = 0.0;
    double norm = 0.0;
    for (int d = 0; d < kActionDim; ++d) {
      dot += p[d] * current[d];
      norm += p[d] * p[d];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0 || current_norm == 0.0) continue;
    const double w = std::max(0.0, dot / (norm * current_norm));
    if (w == 0.0) continue;
    for (int d = 0; d < kActionDim; ++d) sum[d] += w * p[d];
    total += w;
  }
  for (int d = 0; d < kActionDim; ++d) sum[d] /= total;
  return sum;
}

ActionChunk FixedHorizonStep(const DualChunk& chunk, bool use_discrete) {
  return use_discrete ? chunk.disc : chunk.cont;
}

std::string_view ToString(EnsemblerKind kind) {
  switch (kind) {
    case EnsemblerKind::kTemporal: return "temporal";
    case EnsemblerKind::kConfidenceFusion: return "confidence_fusion";
    case EnsemblerKind::kSimilarity: return "similarity";
    case EnsemblerKind::kFixedContinuous: return "fixed_cont";
    case EnsemblerKind::kFixedDiscrete: return "fixed_disc";
    case EnsemblerKind::kAdaHorizon: return "adahorizon";
  }
  return "unknown";
}

EnsemblerKind ParseEnsemblerKind(std::string_view name) {
  for (EnsemblerKind kind : AllEnsemblerKinds()) {
    if (ToString(kind) == name) return kind;
  }
  throw ConfigError("unknown ensembler '" + std::string(name) + "'");
}

std::vector<EnsemblerKind> AllEnsemblerKinds() {
  return {EnsemblerKind::kTemporal,        EnsemblerKind::kConfidenceFusion,
          EnsemblerKind::kSimilarity,      EnsemblerKind::kFixedContinuous,
          EnsemblerKind::kFixedDiscrete,   EnsemblerKind::kAdaHorizon};
}

Ensembler::Ensembler(EnsemblerConfig config, NormStats stats)
    : config_(config), stats_(stats) {
  if (config_.temporal_decay < 0.0) throw ConfigError("temporal_decay must be >= 0");
  if (config_.history_depth < 0) throw ConfigError("history_depth must be >= 0");
}

EnsembleDecision Ensembler::Step(const DualChunk& chunk, std::int64_t timestep) {
  if (chunk.size() < 1) throw ConfigError("empty chunk");
  chunk.Validate();
  EnsembleDecision out;
  switch (config_.kind) {
    case EnsemblerKind::kAdaHorizon: {
      AdaHorizonOutput ada = AdaHorizonStep(chunk, config_.adahorizon, state_, stats_);
      out.actions = std::move(ada.executed);
      out.mad = std::move(ada.mad);
      out.horizon = ada.horizon;
      out.escape = ada.escape;
      return out;
    }
    case EnsemblerKind::kTemporal:
      out.actions.actions.push_back(TemporalEnsembleStep(
          chunk, state_, config_.temporal_decay, timestep, config_.history_depth));
      break;
    case EnsemblerKind::kSimilarity:
      out.actions.actions.push_back(
          SimilarityEnsembleStep(chunk, state_, timestep, config_.history_depth));
      break;
    case EnsemblerKind::kConfidenceFusion:
      out.actions = ConfidenceFusionStep(chunk, config_.confidence_theta);
      break;
    case EnsemblerKind::kFixedContinuous:
      out.actions = FixedHorizonStep(chunk, false);
      break;
    case EnsemblerKind::kFixedDiscrete:
      out.actions = FixedHorizonStep(chunk, true);
      break;
  }
  out.mad = MadPerStep(chunk, stats_);
  out.horizon = out.actions.size();
  return out;
}

}  // namespace chunkrt
