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

#include "chunkrt/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "chunkrt/error.hpp"

namespace chunkrt::harness {
namespace {

using nlohmann::json;

void Convert(const json& j, const std::string& key, bool& out) {
  if (!j.is_boolean()) throw ConfigError(key + ": expected a boolean");
  out = j.get<bool>();
}

void Convert(const json& j, const std::string& key, int& out) {
  if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key + ": integer out of range");
  out = static_cast<int>(v);
}

void Convert(const json& j, const std::string& key, std::uint64_t& out) {
  if (!j.is_number_unsigned()) throw ConfigError(key + ": expected a non-negative integer");
  out = j.get<std::uint64_t>();
}

void Convert(const json& j, const std::string& key, double& out) {
  if (!j.is_number()) throw ConfigError(key + ": expected a number");
  out = j.get<double>();
}

void Convert(const json& j, const std::string& key, std::string& out) {
  if (!j.is_string()) throw ConfigError(key + ": expected a string");
  out = j.get<std::string>();
}

template <typename T>
void Convert(const json& j, const std::string& key, std::vector<T>& out) {
  if (!j.is_array()) throw ConfigError(key + ": expected an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    Convert(j[i], key + "[" + std::to_string(i) + "]", v);
    out.push_back(v);
  }
}

void Convert(const json& j, const std::string& key, Vec3& out) {
  std::vector<double> v;
  Convert(j, key, v);
  if (v.size() != 3) throw ConfigError(key + ": expected 3 numbers");
  out = {v[0], v[1], v[2]};
}

// Reads known keys of one object and rejects anything left over.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(Name() + ": expected an object");
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it != obj_.end()) Convert(*it, Key(key), out);
  }

  Section Child(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return Section(it == obj_.end() ? json::object() : *it, Key(key));
  }

  void Finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + Key(it.key()) + "'");
    }
  }

 private:
  std::string Name() const { return path_.empty() ? "config" : path_; }
  std::string Key(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  json obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadBox(Section s, Box& box) {
  s.Get("lo", box.lo);
  s.Get("hi", box.hi);
  s.Finish();
}

}  // namespace

std::filesystem::path ExperimentConfig::DataDir() const {
  return paths.data.empty() ? std::filesystem::path(out) / "data" : std::filesystem::path(paths.data);
}

std::filesystem::path ExperimentConfig::CheckpointPath() const {
  return paths.checkpoint.empty() ? std::filesystem::path(out) / "policy.ckpt"
                                  : std::filesystem::path(paths.checkpoint);
}

void ExperimentConfig::Validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (out.empty()) throw ConfigError("out must not be empty");
  if (dataset.count < 1) throw ConfigError("dataset.count must be >= 1");
  for (int id : dataset.task_mix) TaskSpec::FromInstruction(id);
  if (!(dataset.actuation_noise >= 0.0)) {
    throw ConfigError("dataset.actuation_noise must be >= 0");
  }
  if (!(dataset.noisy_fraction >= 0.0 && dataset.noisy_fraction <= 1.0)) {
    throw ConfigError("dataset.noisy_fraction must be in [0, 1]");
  }
  shape.Validate();
  train.Validate();
  ensembler.adahorizon.Validate(shape.chunk_length);
  if (!(ensembler.temporal_decay >= 0.0)) throw ConfigError("temporal_decay must be >= 0");
  if (!(ensembler.confidence_theta >= 0.0 && ensembler.confidence_theta <= 1.0)) {
    throw ConfigError("confidence_theta must be in [0, 1]");
  }
  if (ensembler.history_depth < 0) throw ConfigError("history_depth must be >= 0");
  sim.Validate();
  PerturbSpec base = perturb;
  base.mode = PerturbMode::kNone;
  base.Validate();
  if (eval.episodes < 1 || bench.episodes < 1) throw ConfigError("episodes must be >= 1");
  for (const std::string& c : eval.conditions) ParsePerturbMode(c);
  for (const std::string& c : bench.conditions) ParsePerturbMode(c);
  for (const std::string& m : eval.methods) ParseEnsemblerKind(m);
  for (const std::string& m : bench.methods) ParseEnsemblerKind(m);
  if (eval.conditions.empty() || eval.methods.empty() || bench.conditions.empty() ||
      bench.methods.empty()) {
    throw ConfigError("condition and method lists must not be empty");
  }
  if (!(bench.actuation_noise >= 0.0)) throw ConfigError("bench.actuation_noise must be >= 0");
  if (latency.iterations < 1 || latency.warmup < 0 || latency.forward_iterations < 1) {
    throw ConfigError("latency iteration counts must be positive");
  }
  if (kinematics.targets < 1) throw ConfigError("kinematics.targets must be >= 1");
}

ExperimentConfig ConfigFromJsonText(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section s(root, "");
  s.Get("seed", c.seed);
  s.Get("jobs", c.jobs);
  s.Get("out", c.out);
  {
    Section p = s.Child("paths");
    p.Get("data", c.paths.data);
    p.Get("checkpoint", c.paths.checkpoint);
    p.Finish();
  }
  {
    Section d = s.Child("dataset");
    d.Get("count", c.dataset.count);
    d.Get("task_mix", c.dataset.task_mix);
    d.Get("actuation_noise", c.dataset.actuation_noise);
    d.Get("noisy_fraction", c.dataset.noisy_fraction);
    d.Finish();
  }
  {
    Section t = s.Child("train");
    t.Get("hidden", c.shape.hidden);
    t.Get("chunk_length", c.shape.chunk_length);
    t.Get("num_bins", c.shape.num_bins);
    t.Get("lambda", c.train.lambda);
    t.Get("ce_weight", c.train.ce_weight);
    t.Get("learning_rate", c.train.learning_rate);
    t.Get("batch_size", c.train.batch_size);
    t.Get("iterations", c.train.iterations);
    t.Get("beta1", c.train.beta1);
    t.Get("beta2", c.train.beta2);
    t.Get("epsilon", c.train.epsilon);
    t.Get("cosine_decay", c.train.cosine_decay);
    t.Get("lr_floor", c.train.lr_floor);
    t.Get("log_every", c.train.log_every);
    t.Finish();
  }
  {
    Section e = s.Child("ensembler");
    Section a = e.Child("adahorizon");
    a.Get("min_actions", c.ensembler.adahorizon.min_actions);
    a.Get("threshold", c.ensembler.adahorizon.threshold);
    a.Get("replan_threshold", c.ensembler.adahorizon.replan_threshold);
    a.Get("max_replan_count", c.ensembler.adahorizon.max_replan_count);
    a.Get("next_task_thresh", c.ensembler.adahorizon.next_task_thresh);
    a.Get("reset_on_full_horizon", c.ensembler.adahorizon.reset_on_full_horizon);
    a.Finish();
    e.Get("temporal_decay", c.ensembler.temporal_decay);
    e.Get("confidence_theta", c.ensembler.confidence_theta);
    e.Get("history_depth", c.ensembler.history_depth);
    e.Finish();
  }
  {
    Section m = s.Child("sim");
    m.Get("dt", c.sim.dt);
    m.Get("episode_cap", c.sim.episode_cap);
    m.Get("max_speed", c.sim.max_speed);
    m.Get("grasp_radius", c.sim.grasp_radius);
    m.Get("goal_radius", c.sim.goal_radius);
    ReadBox(m.Child("workspace"), c.sim.workspace);
    m.Get("hover_height", c.sim.hover_height);
    m.Get("home", c.sim.home);
    m.Get("home_jitter", c.sim.home_jitter);
    m.Get("expert_step", c.sim.expert_step);
    m.Get("align_radius", c.sim.align_radius);
    m.Get("grasp_tolerance", c.sim.grasp_tolerance);
    m.Get("place_tolerance", c.sim.place_tolerance);
    m.Finish();
  }
  {
    Section p = s.Child("perturb");
    p.Get("distractor_count", c.perturb.distractor_count);
    p.Get("motion_amplitude", c.perturb.motion_amplitude);
    p.Get("motion_speed", c.perturb.motion_speed);
    p.Get("env_shift", c.perturb.env_shift);
    p.Get("occlusion_radius", c.perturb.occlusion_radius);
    p.Get("occlusion_noise", c.perturb.occlusion_noise);
    p.Get("actuation_noise", c.perturb.actuation_noise);
    p.Finish();
  }
  {
    Section e = s.Child("eval");
    e.Get("episodes", c.eval.episodes);
    e.Get("conditions", c.eval.conditions);
    e.Get("methods", c.eval.methods);
    e.Get("log_pwm", c.eval.log_pwm);
    e.Finish();
  }
  {
    Section b = s.Child("bench");
    b.Get("episodes", c.bench.episodes);
    b.Get("conditions", c.bench.conditions);
    b.Get("methods", c.bench.methods);
    b.Get("actuation_noise", c.bench.actuation_noise);
    b.Finish();
  }
  {
    Section l = s.Child("latency");
    l.Get("iterations", c.latency.iterations);
    l.Get("warmup", c.latency.warmup);
    l.Get("forward_iterations", c.latency.forward_iterations);
    l.Finish();
  }
  {
    Section k = s.Child("kinematics");
    k.Get("chain", c.kinematics.chain);
    k.Get("targets", c.kinematics.targets);
    k.Get("probe_mm", c.kinematics.probe_mm);
    k.Finish();
  }
  s.Finish();
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ConfigFromJsonText(buf.str());
}

std::string ConfigToJsonText(const ExperimentConfig& c) {
  const AdaHorizonParams& a = c.ensembler.adahorizon;
  json root = {
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"out", c.out},
      {"paths", {{"data", c.paths.data}, {"checkpoint", c.paths.checkpoint}}},
      {"dataset", {{"count", c.dataset.count}, {"task_mix", c.dataset.task_mix},
                   {"actuation_noise", c.dataset.actuation_noise},
                   {"noisy_fraction", c.dataset.noisy_fraction}}},
      {"train",
       {{"hidden", c.shape.hidden},
        {"chunk_length", c.shape.chunk_length},
        {"num_bins", c.shape.num_bins},
        {"lambda", c.train.lambda},
        {"ce_weight", c.train.ce_weight},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"iterations", c.train.iterations},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon},
        {"cosine_decay", c.train.cosine_decay},
        {"lr_floor", c.train.lr_floor},
        {"log_every", c.train.log_every}}},
      {"ensembler",
       {{"adahorizon",
         {{"min_actions", a.min_actions},
          {"threshold", a.threshold},
          {"replan_threshold", a.replan_threshold},
          {"max_replan_count", a.max_replan_count},
          {"next_task_thresh", a.next_task_thresh},
          {"reset_on_full_horizon", a.reset_on_full_horizon}}},
        {"temporal_decay", c.ensembler.temporal_decay},
        {"confidence_theta", c.ensembler.confidence_theta},
        {"history_depth", c.ensembler.history_depth}}},
      {"sim",
       {{"dt", c.sim.dt},
        {"episode_cap", c.sim.episode_cap},
        {"max_speed", c.sim.max_speed},
        {"grasp_radius", c.sim.grasp_radius},
        {"goal_radius", c.sim.goal_radius},
        {"workspace", {{"lo", c.sim.workspace.lo}, {"hi", c.sim.workspace.hi}}},
        {"hover_height", c.sim.hover_height},
        {"home", c.sim.home},
        {"home_jitter", c.sim.home_jitter},
        {"expert_step", c.sim.expert_step},
        {"align_radius", c.sim.align_radius},
        {"grasp_tolerance", c.sim.grasp_tolerance},
        {"place_tolerance", c.sim.place_tolerance}}},
      {"perturb",
       {{"distractor_count", c.perturb.distractor_count},
        {"motion_amplitude", c.perturb.motion_amplitude},
        {"motion_speed", c.perturb.motion_speed},
        {"env_shift", c.perturb.env_shift},
        {"occlusion_radius", c.perturb.occlusion_radius},
        {"occlusion_noise", c.perturb.occlusion_noise},
        {"actuation_noise", c.perturb.actuation_noise}}},
      {"eval",
       {{"episodes", c.eval.episodes},
        {"conditions", c.eval.conditions},
        {"methods", c.eval.methods},
        {"log_pwm", c.eval.log_pwm}}},
      {"bench",
       {{"episodes", c.bench.episodes},
        {"conditions", c.bench.conditions},
        {"methods", c.bench.methods},
        {"actuation_noise", c.bench.actuation_noise}}},
      {"latency",
       {{"iterations", c.latency.iterations},
        {"warmup", c.latency.warmup},
        {"forward_iterations", c.latency.forward_iterations}}},
      {"kinematics",
       {{"chain", c.kinematics.chain},
        {"targets", c.kinematics.targets},
        {"probe_mm", c.kinematics.probe_mm}}},
  };
  return root.dump(2) + "\n";
}

void ApplyOverrides(ExperimentConfig& config, const Overrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.jobs) config.jobs = *overrides.jobs;
  if (overrides.out) config.out = *overrides.out;
  config.Validate();
}

}  // namespace chunkrt::harness
