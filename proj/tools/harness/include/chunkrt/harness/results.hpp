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

#ifndef CHUNKRT_HARNESS_RESULTS_HPP_
#define CHUNKRT_HARNESS_RESULTS_HPP_

#include <string>
#include <vector>

namespace chunkrt::harness {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion, as fractions in [0, 1].
Interval WilsonInterval(int successes, int trials, double z = kZ95);

// Running totals for one (condition, method) cell.
struct CellTotals {
  int episodes = 0;
  int successes = 0;
  long long chunks = 0;
  long long horizon_sum = 0;
  long long steps = 0;
};

struct ResultsRow {
  std::string condition;
  std::string method;
  int episodes = 0;
  int successes = 0;
  double rate = 0.0;   // percent
  double ci_lo = 0.0;  // percent
  double ci_hi = 0.0;  // percent
  double mean_horizon = 0.0;
  double inf_hz = 0.0;  // inferences per simulated second
  double act_hz = 0.0;  // inf_hz * mean_horizon

  static ResultsRow FromTotals(std::string condition, std::string method,
                               const CellTotals& totals, double dt);
};

struct ResultsTable {
  std::vector<ResultsRow> rows;

  const ResultsRow* Find(const std::string& condition, const std::string& method) const;
  std::string ToCsv() const;
  std::string ToMarkdown(const std::string& title) const;
};

inline constexpr const char* kResultsCsvHeader =
    "condition,method,episodes,successes,rate,ci_lo,ci_hi,mean_horizon,inf_hz,act_hz";

}  // namespace chunkrt::harness

#endif  // CHUNKRT_HARNESS_RESULTS_HPP_
