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

#ifndef CHUNKRT_ACTIONSPACE_HPP_
#define CHUNKRT_ACTIONSPACE_HPP_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chunkrt {

// Action layout: [dx, dy, dz, rx, ry, rz, grip].
inline constexpr int kActionDim = 7;
inline constexpr int kNumBins = 256;
inline constexpr int kDefaultChunkLength = 8;
inline constexpr double kGripThreshold = 0.5;

enum ActionIndex : int {
  kDx = 0,
  kDy = 1,
  kDz = 2,
  kRx = 3,
  kRy = 4,
  kRz = 5,
  kGrip = 6,
};

// One end-effector delta command. Translations in meters, rotations as Euler
// deltas in radians, grip 0 = open / 1 = closed.
struct Action {
  std::array<double, kActionDim> v{};

  double& operator[](int d) { return v[d]; }
  double operator[](int d) const { return v[d]; }

  // Execution-time gripper command.
  bool GripClosed() const { return v[kGrip] >= kGripThreshold; }

  friend bool operator==(const Action&, const Action&) = default;
};

// Per-dimension values in [-1, 1].
using NormalizedAction = std::array<double, kActionDim>;
// Per-dimension bin indices.
using ActionTokens = std::array<int, kActionDim>;

struct ActionChunk {
  std::vector<Action> actions;

  int size() const { return static_cast<int>(actions.size()); }
  bool empty() const { return actions.empty(); }
  const Action& operator[](int t) const { return actions[t]; }
  Action& operator[](int t) { return actions[t]; }

  // First `n` actions.
  ActionChunk Prefix(int n) const;

  friend bool operator==(const ActionChunk&, const ActionChunk&) = default;
};

struct TokenChunk {
  std::vector<ActionTokens> steps;

  int size() const { return static_cast<int>(steps.size()); }
};

// Robust per-dimension bounds mapping raw actions onto [-1, 1].
class NormStats {
 public:
  NormStats();
  NormStats(const std::array<double, kActionDim>& lo,
            const std::array<double, kActionDim>& hi);

  // 1st / 99th percentiles per dimension. Throws ConfigError("no actions").
  static NormStats Compute(std::span<const Action> actions);

  const std::array<double, kActionDim>& lo() const { return lo_; }
  const std::array<double, kActionDim>& hi() const { return hi_; }
  bool Degenerate(int d) const { return !(hi_[d] > lo_[d]); }

  // Clamped to [-1, 1]; degenerate dimensions map to 0.
  NormalizedAction Normalize(const Action& a) const;
  // Inverse of Normalize on [-1, 1]; degenerate dimensions return lo.
  Action Denormalize(const NormalizedAction& x) const;

  std::string ToText() const;
  static NormStats FromText(const std::string& text);
  void Save(const std::filesystem::path& path) const;
  static NormStats Load(const std::filesystem::path& path);

  friend bool operator==(const NormStats&, const NormStats&) = default;

 private:
  std::array<double, kActionDim> lo_;
  std::array<double, kActionDim> hi_;
};

// Sorted-order linear interpolation percentile, q in [0, 1]. `sorted` must be
// non-empty and ascending.
double Percentile(std::span<const double> sorted, double q);

// floor((x + 1) / 2 * bins) clamped to [0, bins - 1].
int QuantizeValue(double x, int num_bins = kNumBins);
// Center of bin `token` in normalized units. Throws ConfigError when the
// token is out of range.
double BinCenter(int token, int num_bins = kNumBins);

ActionTokens Quantize(const NormalizedAction& x, int num_bins = kNumBins);
NormalizedAction DequantizeNormalized(const ActionTokens& tokens,
                                      int num_bins = kNumBins);
Action Dequantize(const ActionTokens& tokens, const NormStats& stats,
                  int num_bins = kNumBins);

TokenChunk Tokenize(const ActionChunk& chunk, const NormStats& stats,
                    int num_bins = kNumBins);

}  // namespace chunkrt

#endif  // CHUNKRT_ACTIONSPACE_HPP_
