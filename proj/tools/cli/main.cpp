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

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chunkrt/error.hpp"
#include "chunkrt/harness/commands.hpp"
#include "chunkrt/harness/config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  bool force = false;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment config (JSON)");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", flags.force, "overwrite existing outputs");
}

chunkrt::harness::ExperimentConfig ResolveConfig(const CLI::App* cmd, const CommonFlags& flags) {
  chunkrt::harness::ExperimentConfig config;
  if (!flags.config.empty()) config = chunkrt::harness::LoadConfig(flags.config);
  chunkrt::harness::Overrides overrides;
  if (cmd->count("--seed")) overrides.seed = flags.seed;
  if (cmd->count("--jobs")) overrides.jobs = flags.jobs;
  if (cmd->count("--out")) overrides.out = flags.out;
  chunkrt::harness::ApplyOverrides(config, overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chunkrt: action-chunk execution runtime and benchmark harness"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* gen = app.add_subcommand("gen-data", "generate scripted demonstrations");
  CLI::App* train = app.add_subcommand("train", "train the dual-head policy");
  CLI::App* eval = app.add_subcommand("eval", "evaluate methods across conditions");
  CLI::App* bench = app.add_subcommand("bench-ensemblers", "compare all ensemblers");
  CLI::App* latency = app.add_subcommand("bench-latency", "time forward and ensemblers");
  CLI::App* ik = app.add_subcommand("ik-check", "kinematics round-trip and reach checks");
  for (CLI::App* cmd : {gen, train, eval, bench, latency, ik}) AddCommonFlags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const chunkrt::harness::ExperimentConfig config = ResolveConfig(cmd, flags);
    chunkrt::harness::CommandOptions options;
    options.force = flags.force;
    options.log = &std::cout;
    if (cmd == gen) {
      chunkrt::harness::RunGenData(config, options);
    } else if (cmd == train) {
      chunkrt::harness::RunTrain(config, options);
    } else if (cmd == eval) {
      chunkrt::harness::RunEval(config, options);
    } else if (cmd == bench) {
      chunkrt::harness::RunBenchEnsemblers(config, options);
    } else if (cmd == latency) {
      chunkrt::harness::RunBenchLatency(config, options);
    } else if (cmd == ik) {
      chunkrt::harness::RunIkCheck(config, options);
    }
  } catch (const chunkrt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
