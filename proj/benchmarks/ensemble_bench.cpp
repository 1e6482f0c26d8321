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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "chunkrt/ensemble.hpp"

namespace chunkrt {
namespace {

DualChunk RandomChunk(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  DualChunk c;
  for (int t = 0; t < k; ++t) {
    Action a, b;
    for (int d = 0; d < kActionDim; ++d) {
      a.v[d] = u(rng);
      b.v[d] = a.v[d] + 0.1 * u(rng);
    }
    c.cont.actions.push_back(a);
    c.disc.actions.push_back(b);
    c.disc_conf.push_back(0.9);
  }
  return c;
}

void BM_EnsemblerStep(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<DualChunk> chunks;
  for (int i = 0; i < 64; ++i) chunks.push_back(RandomChunk(rng, kDefaultChunkLength));
  EnsemblerConfig cfg;
  cfg.kind = static_cast<EnsemblerKind>(state.range(0));
  Ensembler ens(cfg, NormStats{});
  std::int64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ens.Step(chunks[t % chunks.size()], t));
    ++t;
  }
  state.SetLabel(std::string(ToString(cfg.kind)));
}
BENCHMARK(BM_EnsemblerStep)->DenseRange(0, 5);

void BM_MadPerStep(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const DualChunk c = RandomChunk(rng, kDefaultChunkLength);
  for (auto _ : state) benchmark::DoNotOptimize(MadPerStep(c, NormStats{}));
}
BENCHMARK(BM_MadPerStep);

}  // namespace
}  // namespace chunkrt
