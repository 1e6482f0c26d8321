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

#include "chunkrt/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "chunkrt/error.hpp"
#include "chunkrt/noise.hpp"

namespace chunkrt {
namespace {

using nlohmann::json;

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kManifestFormat = "chunkrt-dataset";

bool Finite(const Vec3& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

json FrameToJson(const Frame& f) {
  const Observation& o = f.obs;
  json obs = json::array({o.ee_pos[0], o.ee_pos[1], o.ee_pos[2], o.ee_euler[0], o.ee_euler[1],
                          o.ee_euler[2], o.grip_state, o.object_pos[0], o.object_pos[1],
                          o.object_pos[2], o.goal_pos[0], o.goal_pos[1], o.goal_pos[2]});
  json j{{"o", std::move(obs)}, {"a", f.action.v}};
  if (!f.plan.empty()) {
    json plan = json::array();
    for (const Action& a : f.plan) plan.push_back(a.v);
    j["p"] = std::move(plan);
  }
  return j;
}

Action ActionFromJson(const json& j) {
  const auto a = j.get<std::vector<double>>();
  if (a.size() != kActionDim) throw FormatError("frame has wrong width");
  Action out;
  std::copy(a.begin(), a.end(), out.v.begin());
  return out;
}

json DemoToJson(const Demonstration& d) {
  json frames = json::array();
  for (const Frame& f : d.frames) frames.push_back(FrameToJson(f));
  return json{{"instruction", d.instruction},
              {"instruction_id", d.instruction_id},
              {"seed", d.seed},
              {"object_class", std::string(ToString(d.task.object_class))},
              {"placement", std::string(ToString(d.task.placement))},
              {"expert_version", d.expert_version},
              {"frames", std::move(frames)}};
}

Demonstration DemoFromJson(const json& j) {
  Demonstration d;
  d.instruction = j.at("instruction").get<std::string>();
  d.instruction_id = j.at("instruction_id").get<int>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.expert_version = j.at("expert_version").get<std::string>();
  d.task = TaskSpec::FromInstruction(d.instruction_id);
  if (ParseObjectClass(j.at("object_class").get<std::string>()) != d.task.object_class ||
      ParsePlacement(j.at("placement").get<std::string>()) != d.task.placement) {
    throw FormatError("task fields disagree with instruction_id");
  }
  for (const json& jf : j.at("frames")) {
    const auto o = jf.at("o").get<std::vector<double>>();
    if (o.size() != kStateFeatures) throw FormatError("frame has wrong width");
    Frame f;
    f.obs.ee_pos = {o[0], o[1], o[2]};
    f.obs.ee_euler = {o[3], o[4], o[5]};
    f.obs.grip_state = o[6];
    f.obs.object_pos = {o[7], o[8], o[9]};
    f.obs.goal_pos = {o[10], o[11], o[12]};
    f.obs.instruction_id = d.instruction_id;
    f.action = ActionFromJson(jf.at("a"));
    if (jf.contains("p")) {
      for (const json& ja : jf.at("p")) f.plan.push_back(ActionFromJson(ja));
    }
    d.frames.push_back(std::move(f));
  }
  d.Validate();
  return d;
}

std::array<int, kNumInstructions> CountTasks(const std::vector<Demonstration>& demos) {
  std::array<int, kNumInstructions> counts{};
  for (const Demonstration& d : demos) ++counts[d.instruction_id];
  return counts;
}

}  // namespace

void Demonstration::Validate() const {
  if (frames.empty()) throw FormatError("demonstration has no frames");
  if (instruction_id < 0 || instruction_id >= kNumInstructions) {
    throw FormatError("instruction id out of range");
  }
  if (TaskSpec::FromInstruction(instruction_id) != task) {
    throw FormatError("task does not match instruction id");
  }
  if (instruction != task.InstructionText()) {
    throw FormatError("instruction text does not match template " +
                      std::to_string(instruction_id));
  }
  auto check_action = [](const Action& a) {
    for (double x : a.v) {
      if (!std::isfinite(x)) throw FormatError("non-finite action");
    }
    if (a[kGrip] != 0.0 && a[kGrip] != 1.0) throw FormatError("grip must be 0 or 1");
  };
  for (const Frame& f : frames) {
    check_action(f.action);
    for (const Action& a : f.plan) check_action(a);
    if (!f.plan.empty() && f.plan.front() != f.action) {
      throw FormatError("plan does not start with the frame action");
    }
    if (!Finite(f.obs.ee_pos) || !Finite(f.obs.ee_euler) || !Finite(f.obs.object_pos) ||
        !Finite(f.obs.goal_pos) || !std::isfinite(f.obs.grip_state)) {
      throw FormatError("non-finite observation");
    }
    if (f.obs.instruction_id != instruction_id) {
      throw FormatError("frame instruction id differs from demonstration");
    }
  }
}

std::vector<Action> Dataset::AllActions() const {
  std::vector<Action> out;
  for (const Demonstration& d : demos) {
    for (const Frame& f : d.frames) out.push_back(f.action);
  }
  return out;
}

Demonstration RecordDemonstration(const TaskSpec& task, std::uint64_t seed,
                                  const SimConfig& sim, double actuation_noise,
                                  int plan_length) {
  Demonstration demo;
  demo.task = task;
  demo.instruction_id = task.instruction_id;
  demo.instruction = task.InstructionText();
  demo.seed = seed;

  PerturbSpec perturb;
  perturb.actuation_noise = actuation_noise;
  WorldState state = Reset(task, perturb, seed, sim);
  while (!IsSuccess(state, sim)) {
    if (state.step >= sim.episode_cap) {
      throw Error("scripted expert failed: task " + std::to_string(task.instruction_id) +
                  " seed " + std::to_string(seed));
    }
    const Action a = ScriptedExpert(state, sim);
    Frame frame{Observe(state), a, {}};
    if (actuation_noise > 0.0 && plan_length > 0) {
      WorldState clean = state;
      clean.perturb.actuation_noise = 0.0;
      while (static_cast<int>(frame.plan.size()) < plan_length) {
        frame.plan.push_back(IsSuccess(clean, sim) ? frame.plan.back()
                                                   : ScriptedExpert(clean, sim));
        clean = Step(clean, frame.plan.back(), sim);
      }
    }
    demo.frames.push_back(std::move(frame));
    state = Step(state, a, sim);
  }
  return demo;
}

Dataset GenerateDataset(const GenerateOptions& options) {
  if (options.count < 1) throw ConfigError("dataset count must be >= 1");
  if (options.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(options.actuation_noise >= 0.0)) throw ConfigError("actuation_noise must be >= 0");
  if (!(options.noisy_fraction >= 0.0 && options.noisy_fraction <= 1.0)) {
    throw ConfigError("noisy_fraction must be in [0, 1]");
  }
  if (options.plan_length < 0) throw ConfigError("plan_length must be >= 0");
  std::vector<int> mix = options.task_mix;
  if (mix.empty()) {
    for (int i = 0; i < kNumInstructions; ++i) mix.push_back(i);
  }
  for (int id : mix) TaskSpec::FromInstruction(id);
  options.sim.Validate();

  Dataset ds;
  ds.demos.resize(options.count);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < options.count; i = next++) {
      try {
        const TaskSpec task = TaskSpec::FromInstruction(mix[i % mix.size()]);
        const double f = options.noisy_fraction;
        const bool noisy = std::floor((i + 1) * f) > std::floor(i * f);
        ds.demos[i] = RecordDemonstration(task, DeriveSeed(options.seed, i), options.sim,
                                          noisy ? options.actuation_noise : 0.0,
                                          options.plan_length);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.count;
      }
    }
  };
  const int jobs = std::min(options.jobs, options.count);
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  ds.manifest.count = options.count;
  ds.manifest.per_task = CountTasks(ds.demos);
  ds.manifest.seed = options.seed;
  const std::vector<Action> actions = ds.AllActions();
  ds.stats = NormStats::Compute(actions);
  return ds;
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const DatasetManifest& m = dataset.manifest;
  json manifest = {{"format", kManifestFormat},
                   {"format_version", m.format_version},
                   {"count", static_cast<int>(dataset.demos.size())},
                   {"per_task", CountTasks(dataset.demos)},
                   {"seed", m.seed},
                   {"expert_version", kExpertVersion},
                   {"norm_stats", m.norm_stats_file},
                   {"demos", m.demos_file}};
  {
    std::ofstream out(dir / kManifestFile);
    out << manifest.dump(2) << "\n";
    if (!out) throw Error("cannot write " + (dir / kManifestFile).string());
  }
  dataset.stats.Save(dir / m.norm_stats_file);
  std::ofstream out(dir / m.demos_file);
  for (const Demonstration& d : dataset.demos) out << DemoToJson(d).dump() << "\n";
  if (!out) throw Error("cannot write " + (dir / m.demos_file).string());
}

Dataset LoadDataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw FormatError("cannot open " + (dir / kManifestFile).string());
  Dataset ds;
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format").get<std::string>() != kManifestFormat) {
      throw FormatError("not a dataset manifest");
    }
    ds.manifest.format_version = manifest.at("format_version").get<int>();
    ds.manifest.count = manifest.at("count").get<int>();
    ds.manifest.per_task = manifest.at("per_task").get<std::array<int, kNumInstructions>>();
    ds.manifest.seed = manifest.at("seed").get<std::uint64_t>();
    ds.manifest.norm_stats_file = manifest.at("norm_stats").get<std::string>();
    ds.manifest.demos_file = manifest.at("demos").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
  if (ds.manifest.format_version != kDatasetFormatVersion) {
    throw FormatError("unsupported dataset version " +
                      std::to_string(ds.manifest.format_version));
  }
  ds.stats = NormStats::Load(dir / ds.manifest.norm_stats_file);

  std::ifstream demos(dir / ds.manifest.demos_file);
  if (!demos) throw FormatError("cannot open " + (dir / ds.manifest.demos_file).string());
  std::string line;
  for (int index = 0; std::getline(demos, line); ++index) {
    if (line.empty()) continue;
    try {
      ds.demos.push_back(DemoFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("record " + std::to_string(index) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError("record " + std::to_string(index) + ": " + e.what());
    }
  }
  if (static_cast<int>(ds.demos.size()) != ds.manifest.count ||
      CountTasks(ds.demos) != ds.manifest.per_task) {
    throw FormatError("manifest inconsistent: expected " + std::to_string(ds.manifest.count) +
                      " records, found " + std::to_string(ds.demos.size()));
  }
  return ds;
}

std::vector<TrainingSample> Chunkify(const Demonstration& demo, int chunk_length) {
  if (chunk_length < 1) throw ConfigError("chunk length must be >= 1");
  if (demo.frames.empty()) throw ConfigError("demonstration has no frames");
  const int n = static_cast<int>(demo.frames.size());
  std::vector<TrainingSample> out;
  out.reserve(n);
  for (int t = 0; t < n; ++t) {
    TrainingSample s;
    const Frame& f = demo.frames[t];
    s.obs = f.obs;
    if (!f.plan.empty()) {
      if (static_cast<int>(f.plan.size()) < chunk_length) {
        throw ConfigError("plan shorter than the chunk length");
      }
      s.target.actions.assign(f.plan.begin(), f.plan.begin() + chunk_length);
    } else {
      s.target.actions.reserve(chunk_length);
      for (int k = 0; k < chunk_length; ++k) {
        s.target.actions.push_back(demo.frames[std::min(t + k, n - 1)].action);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainingSample> ChunkifyAll(const std::vector<Demonstration>& demos,
                                        int chunk_length) {
  std::vector<TrainingSample> out;
  for (const Demonstration& d : demos) {
    std::vector<TrainingSample> part = Chunkify(d, chunk_length);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace chunkrt
