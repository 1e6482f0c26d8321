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

// Independent reference implementations used only by tests. They restate the
// rules from scratch with plain loops and share no code with the library.
#ifndef CHUNKRT_TESTS_ORACLES_HPP_
#define CHUNKRT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Percentile by sorting a copy and interpolating between neighbours.
inline double SortPercentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// Mean absolute difference of two normalized K x D grids, one scalar per row.
inline std::vector<double> Mad(const std::vector<std::vector<double>>& c,
                               const std::vector<std::vector<double>>& d) {
  std::vector<double> out;
  for (std::size_t t = 0; t < c.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < c[t].size(); ++j) s += std::fabs(c[t][j] - d[t][j]);
    out.push_back(s / static_cast<double>(c[t].size()));
  }
  return out;
}

struct AlgoState {
  int replan_ctr = 0;
  int max_replan_ctr = 0;
};

struct AlgoParams {
  int min_actions = 4;
  double threshold = 0.06;
  double replan_threshold = 0.12;
  int max_replan_count = 5;
  int next_task_thresh = 3;
};

struct AlgoResult {
  int horizon = 0;
  bool escape = false;
};

// Line-by-line reading of the adaptive horizon procedure on a mad vector.
inline AlgoResult AdaptiveHorizon(const std::vector<double>& mad, const AlgoParams& p,
                                  AlgoState& s) {
  const int k = static_cast<int>(mad.size());
  bool replan = false;
  for (int t = 0; t < p.min_actions; ++t) {
    if (mad[t] > p.replan_threshold) replan = true;
  }
  if (replan && p.min_actions > 1) s.replan_ctr = s.replan_ctr + 1;
  if (s.replan_ctr > s.max_replan_ctr) s.max_replan_ctr = s.replan_ctr;
  if (s.max_replan_ctr >= p.max_replan_count && s.replan_ctr >= p.next_task_thresh) {
    return {k, true};
  }
  std::vector<bool> mask(k);
  for (int t = 0; t < k; ++t) mask[t] = mad[t] < p.threshold;
  int h = p.min_actions;
  int t = p.min_actions;
  while (t < k && mask[t]) {
    h = h + 1;
    t = t + 1;
  }
  return {h, false};
}

// Forward kinematics as an explicit product of 4x4 homogeneous matrices:
// T = prod_i Rot(axis_i, q_i) * Trans(offset_i), tip = T * Trans(gripper).
inline Eigen::Matrix4d RotZ(double a) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = std::cos(a);
  m(0, 1) = -std::sin(a);
  m(1, 0) = std::sin(a);
  m(1, 1) = std::cos(a);
  return m;
}

inline Eigen::Matrix4d RotY(double a) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = std::cos(a);
  m(0, 2) = std::sin(a);
  m(2, 0) = -std::sin(a);
  m(2, 2) = std::cos(a);
  return m;
}

inline Eigen::Matrix4d Trans(const Eigen::Vector3d& v) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 3) = v;
  return m;
}

// is_roll[i] selects z (roll) or y (pitch) as the joint axis.
inline Eigen::Matrix4d ChainProduct(const std::array<bool, 6>& is_roll,
                                    const std::array<Eigen::Vector3d, 6>& offsets,
                                    const std::array<double, 6>& q, int upto) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int i = 0; i < upto; ++i) {
    t = t * (is_roll[i] ? RotZ(q[i]) : RotY(q[i])) * Trans(offsets[i]);
  }
  return t;
}

}  // namespace oracle

#endif  // CHUNKRT_TESTS_ORACLES_HPP_
