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

#include "chunkrt/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "chunkrt/actionspace.hpp"
#include "chunkrt/error.hpp"

namespace chunkrt::harness {

RankTest MannWhitneyGreater(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ConfigError("rank test needs two non-empty samples");
  struct Item {
    double v;
    bool from_x;
  };
  std::vector<Item> all;
  for (double v : x) all.push_back({v, true});
  for (double v : y) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

  const double n1 = x.size();
  const double n2 = y.size();
  const double n = n1 + n2;
  double rank_sum_x = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].from_x) rank_sum_x += avg_rank;
    }
    i = j;
  }
  RankTest r;
  r.u = rank_sum_x - n1 * (n1 + 1.0) / 2.0;
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    r.z = 0.0;
    r.p = r.u > mean ? 0.0 : 1.0;
    return r;
  }
  r.z = (r.u - mean - 0.5) / std::sqrt(var);
  r.p = 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

double Quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return Percentile(sorted, q);
}

}  // namespace chunkrt::harness
