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

#include "chunkrt/actionspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chunkrt/error.hpp"

namespace chunkrt {
namespace {

constexpr char kNormStatsTag[] = "chunkrt-normstats/1";

std::string FormatRow(const std::array<double, kActionDim>& row) {
  std::string out;
  char buf[40];
  for (int d = 0; d < kActionDim; ++d) {
    std::snprintf(buf, sizeof(buf), "%.17g", row[d]);
    if (d > 0) out += ' ';
    out += buf;
  }
  return out;
}

}  // namespace

ActionChunk ActionChunk::Prefix(int n) const {
  ActionChunk out;
  n = std::clamp(n, 0, size());
  out.actions.assign(actions.begin(), actions.begin() + n);
  return out;
}

NormStats::NormStats() {
  lo_.fill(-1.0);
  hi_.fill(1.0);
}

NormStats::NormStats(const std::array<double, kActionDim>& lo,
                     const std::array<double, kActionDim>& hi)
    : lo_(lo), hi_(hi) {
  for (int d = 0; d < kActionDim; ++d) {
    if (!std::isfinite(lo_[d]) || !std::isfinite(hi_[d]) || lo_[d] > hi_[d]) {
      throw ConfigError("norm stats: need finite lo <= hi in every dimension");
    }
  }
}

double Percentile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return sorted[below] + frac * (sorted[above] - sorted[below]);
}

NormStats NormStats::Compute(std::span<const Action> actions) {
  if (actions.empty()) throw ConfigError("no actions");
  std::array<double, kActionDim> lo{};
  std::array<double, kActionDim> hi{};
  std::vector<double> column(actions.size());
  for (int d = 0; d < kActionDim; ++d) {
    for (std::size_t i = 0; i < actions.size(); ++i) column[i] = actions[i][d];
    std::sort(column.begin(), column.end());
    lo[d] = Percentile(column, 0.01);
    hi[d] = Percentile(column, 0.99);
  }
  return NormStats(lo, hi);
}

NormalizedAction NormStats::Normalize(const Action& a) const {
  NormalizedAction x{};
  for (int d = 0; d < kActionDim; ++d) {
    if (Degenerate(d)) {
      x[d] = 0.0;
      continue;
    }
    const double scaled = 2.0 * (a[d] - lo_[d]) / (hi_[d] - lo_[d]) - 1.0;
    x[d] = std::clamp(scaled, -1.0, 1.0);
  }
  return x;
}

Action NormStats::Denormalize(const NormalizedAction& x) const {
  Action a;
  for (int d = 0; d < kActionDim; ++d) {
    a[d] = Degenerate(d) ? lo_[d]
                         : lo_[d] + 0.5 * (x[d] + 1.0) * (hi_[d] - lo_[d]);
  }
  return a;
}

std::string NormStats::ToText() const {
  std::ostringstream out;
  out << "format " << kNormStatsTag << '\n';
  out << "dims " << kActionDim << '\n';
  out << "lo " << FormatRow(lo_) << '\n';
  out << "hi " << FormatRow(hi_) << '\n';
  return out.str();
}

NormStats NormStats::FromText(const std::string& text) {
  std::istringstream in(text);
  std::string key;
  std::string tag;
  int dims = 0;
  std::array<double, kActionDim> lo{};
  std::array<double, kActionDim> hi{};
  bool have_lo = false;
  bool have_hi = false;
  while (in >> key) {
    if (key == "format") {
      in >> tag;
    } else if (key == "dims") {
      in >> dims;
    } else if (key == "lo" || key == "hi") {
      auto& row = key == "lo" ? lo : hi;
      for (double& value : row) {
        if (!(in >> value)) throw FormatError("norm stats: short " + key + " row");
      }
      (key == "lo" ? have_lo : have_hi) = true;
    } else {
      throw FormatError("norm stats: unknown key '" + key + "'");
    }
  }
  if (tag != kNormStatsTag) throw FormatError("norm stats: bad format tag '" + tag + "'");
  if (dims != kActionDim) throw FormatError("norm stats: expected 7 dims");
  if (!have_lo || !have_hi) throw FormatError("norm stats: missing lo/hi");
  try {
    return NormStats(lo, hi);
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
}

void NormStats::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << ToText();
}

NormStats NormStats::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromText(buffer.str());
}

int QuantizeValue(double x, int num_bins) {
  const double scaled = std::floor((x + 1.0) * 0.5 * num_bins);
  if (!(scaled > 0.0)) return 0;  // also maps NaN to bin 0
  if (scaled >= num_bins - 1) return num_bins - 1;
  return static_cast<int>(scaled);
}

double BinCenter(int token, int num_bins) {
  if (token < 0 || token >= num_bins) {
    throw ConfigError("token " + std::to_string(token) + " outside [0, " +
                      std::to_string(num_bins) + ")");
  }
  return -1.0 + (token + 0.5) * (2.0 / num_bins);
}

ActionTokens Quantize(const NormalizedAction& x, int num_bins) {
  ActionTokens tokens{};
  for (int d = 0; d < kActionDim; ++d) tokens[d] = QuantizeValue(x[d], num_bins);
  return tokens;
}

NormalizedAction DequantizeNormalized(const ActionTokens& tokens, int num_bins) {
  NormalizedAction x{};
  for (int d = 0; d < kActionDim; ++d) x[d] = BinCenter(tokens[d], num_bins);
  return x;
}

Action Dequantize(const ActionTokens& tokens, const NormStats& stats,
                  int num_bins) {
  return stats.Denormalize(DequantizeNormalized(tokens, num_bins));
}

TokenChunk Tokenize(const ActionChunk& chunk, const NormStats& stats,
                    int num_bins) {
  TokenChunk out;
  out.steps.reserve(chunk.actions.size());
  for (const Action& a : chunk.actions) {
    out.steps.push_back(Quantize(stats.Normalize(a), num_bins));
  }
  return out;
}

}  // namespace chunkrt
