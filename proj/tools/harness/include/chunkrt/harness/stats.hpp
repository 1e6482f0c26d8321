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

#ifndef CHUNKRT_HARNESS_STATS_HPP_
#define CHUNKRT_HARNESS_STATS_HPP_

#include <span>

namespace chunkrt::harness {

struct RankTest {
  double u = 0.0;  // Mann-Whitney U of the first sample
  double z = 0.0;
  double p = 1.0;  // one-sided
};

// One-sided Mann-Whitney test of "x tends to be larger than y". Normal
// approximation with tie and continuity corrections.
RankTest MannWhitneyGreater(std::span<const double> x, std::span<const double> y);

// Sample quantile by sorted-order linear interpolation, q in [0, 1].
double Quantile(std::span<const double> values, double q);

}  // namespace chunkrt::harness

#endif  // CHUNKRT_HARNESS_STATS_HPP_
