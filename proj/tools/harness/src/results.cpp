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

#include "chunkrt/harness/results.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "chunkrt/error.hpp"

namespace chunkrt::harness {
namespace {

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Both renderers read these strings, so CSV and Markdown cannot disagree.
std::array<std::string, 10> Cells(const ResultsRow& r) {
  return {r.condition,
          r.method,
          std::to_string(r.episodes),
          std::to_string(r.successes),
          Fixed(r.rate, 2),
          Fixed(r.ci_lo, 2),
          Fixed(r.ci_hi, 2),
          Fixed(r.mean_horizon, 3),
          Fixed(r.inf_hz, 3),
          Fixed(r.act_hz, 3)};
}

}  // namespace

Interval WilsonInterval(int successes, int trials, double z) {
  if (trials <= 0 || successes < 0 || successes > trials) {
    throw ConfigError("invalid binomial counts");
  }
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ResultsRow ResultsRow::FromTotals(std::string condition, std::string method,
                                  const CellTotals& t, double dt) {
  ResultsRow r;
  r.condition = std::move(condition);
  r.method = std::move(method);
  r.episodes = t.episodes;
  r.successes = t.successes;
  if (t.episodes > 0) {
    const Interval ci = WilsonInterval(t.successes, t.episodes);
    r.rate = 100.0 * t.successes / t.episodes;
    r.ci_lo = 100.0 * ci.lo;
    r.ci_hi = 100.0 * ci.hi;
  }
  if (t.chunks > 0) r.mean_horizon = static_cast<double>(t.horizon_sum) / t.chunks;
  if (t.steps > 0) r.inf_hz = static_cast<double>(t.chunks) / (t.steps * dt);
  r.act_hz = r.inf_hz * r.mean_horizon;
  return r;
}

const ResultsRow* ResultsTable::Find(const std::string& condition,
                                     const std::string& method) const {
  for (const ResultsRow& r : rows) {
    if (r.condition == condition && r.method == method) return &r;
  }
  return nullptr;
}

std::string ResultsTable::ToCsv() const {
  std::string out = std::string(kResultsCsvHeader) + "\n";
  for (const ResultsRow& r : rows) {
    const auto cells = Cells(r);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out += cells[i];
      out += i + 1 < cells.size() ? "," : "\n";
    }
  }
  return out;
}

std::string ResultsTable::ToMarkdown(const std::string& title) const {
  std::string out = "# " + title + "\n\n";
  out +=
      "| condition | method | episodes | successes | success rate (%) | 95% CI | "
      "mean horizon | inf/s | actions/s |\n";
  out += "|---|---|---:|---:|---:|---|---:|---:|---:|\n";
  for (const ResultsRow& r : rows) {
    const auto c = Cells(r);
    out += "| " + c[0] + " | " + c[1] + " | " + c[2] + " | " + c[3] + " | " + c[4] + " | [" +
           c[5] + ", " + c[6] + "] | " + c[7] + " | " + c[8] + " | " + c[9] + " |\n";
  }
  return out;
}

}  // namespace chunkrt::harness
