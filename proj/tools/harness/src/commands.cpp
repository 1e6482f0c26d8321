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

#include "chunkrt/harness/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include <json.hpp>

#include "chunkrt/error.hpp"
#include "chunkrt/harness/pool.hpp"
#include "chunkrt/harness/stats.hpp"
#include "chunkrt/kinematics.hpp"
#include "chunkrt/noise.hpp"

namespace chunkrt::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void WriteFile(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

void EchoConfig(const ExperimentConfig& config) {
  WriteFile(fs::path(config.out) / "config.echo", ConfigToJsonText(config));
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

KinematicChain LoadChain(const ExperimentConfig& config) {
  KinematicChain chain = config.kinematics.chain.empty()
                             ? KinematicChain::Default()
                             : KinematicChain::Load(config.kinematics.chain);
  chain.Validate();
  return chain;
}

PolicyNet LoadCheckpoint(const ExperimentConfig& config) {
  const fs::path path = config.CheckpointPath();
  if (!fs::exists(path)) throw Error("checkpoint not found: " + path.string());
  return PolicyNet::Load(path);
}

json EpisodeToJson(const EpisodeRecord& r) {
  json chunks = json::array();
  for (const ChunkRecord& c : r.result.chunks) {
    chunks.push_back(
        {{"horizon", c.horizon}, {"mean_mad", c.mean_mad}, {"escape", c.escape}, {"mad", c.mad}});
  }
  json j = {{"condition", r.condition},
            {"method", r.method},
            {"episode", r.episode},
            {"seed", r.seed},
            {"task", r.instruction_id},
            {"perturb", r.condition},
            {"ensembler", r.method},
            {"success", r.result.success},
            {"steps", r.result.steps},
            {"inferences", r.result.inferences},
            {"chunks", std::move(chunks)},
            {"inference_ns", r.result.inference_ns}};
  if (!r.result.pwm.empty()) {
    j["pwm"] = r.result.pwm;
    j["ik_failures"] = r.result.ik_failures;
  }
  return j;
}

void Accumulate(CellTotals& t, const EpisodeResult& r) {
  ++t.episodes;
  if (r.success) ++t.successes;
  for (const ChunkRecord& c : r.chunks) {
    ++t.chunks;
    t.horizon_sum += c.horizon;
  }
  t.steps += r.steps;
}

TimingStats Summarize(const std::vector<double>& ns, double horizon_sum) {
  TimingStats s;
  s.iterations = static_cast<int>(ns.size());
  s.median_ns = Quantile(ns, 0.5);
  s.p99_ns = Quantile(ns, 0.99);
  s.mean_horizon = ns.empty() ? 0.0 : horizon_sum / static_cast<double>(ns.size());
  return s;
}

// Times Ensembler::Step over a cycle of precomputed chunks.
TimingStats TimeEnsembler(const EnsemblerConfig& ec, const NormStats& stats,
                          const std::vector<DualChunk>& chunks, int warmup, int iterations) {
  using Clock = std::chrono::steady_clock;
  Ensembler ensembler(ec, stats);
  std::vector<double> ns;
  ns.reserve(iterations);
  double horizon_sum = 0.0;
  for (int i = 0; i < warmup + iterations; ++i) {
    const DualChunk& chunk = chunks[i % chunks.size()];
    const auto start = Clock::now();
    const EnsembleDecision d = ensembler.Step(chunk, i);
    const auto stop = Clock::now();
    if (i >= warmup) {
      ns.push_back(std::chrono::duration<double, std::nano>(stop - start).count());
      horizon_sum += d.horizon;
    }
  }
  return Summarize(ns, horizon_sum);
}

}  // namespace

DatasetManifest RunGenData(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path dir = config.DataDir();
  if (fs::exists(dir / "manifest.json") && !options.force) {
    throw ConfigError("dataset already exists at " + dir.string() + " (use --force)");
  }
  GenerateOptions gen;
  gen.count = config.dataset.count;
  gen.seed = config.seed;
  gen.task_mix = config.dataset.task_mix;
  gen.sim = config.sim;
  gen.actuation_noise = config.dataset.actuation_noise;
  gen.noisy_fraction = config.dataset.noisy_fraction;
  gen.plan_length = config.shape.chunk_length;
  gen.jobs = config.jobs;
  const Dataset ds = GenerateDataset(gen);
  SaveDataset(ds, dir);
  EchoConfig(config);
  if (options.log) {
    std::size_t frames = 0;
    for (const Demonstration& d : ds.demos) frames += d.frames.size();
    *options.log << "dataset: " << ds.manifest.count << " demonstrations, " << frames
                 << " frames -> " << dir.string() << "\n";
    *options.log << "per task:";
    for (int c : ds.manifest.per_task) *options.log << " " << c;
    *options.log << "\n";
  }
  return ds.manifest;
}

TrainSummary RunTrain(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path ckpt = config.CheckpointPath();
  if (fs::exists(ckpt) && !options.force) {
    throw ConfigError("checkpoint already exists at " + ckpt.string() + " (use --force)");
  }
  const Dataset ds = LoadDataset(config.DataDir());
  const std::vector<TrainingSample> samples = ChunkifyAll(ds.demos, config.shape.chunk_length);
  TrainConfig tc = config.train;
  tc.seed = config.seed;

  TrainSummary summary;
  summary.samples = static_cast<int>(samples.size());
  summary.iterations = tc.iterations;
  summary.initial =
      EvaluateLoss(InitialNet(samples, config.shape, ds.stats, tc), samples, tc.lambda);

  std::string loss_csv = "iteration,learning_rate,total,ce,l1\n";
  PolicyNet net = Train(samples, config.shape, ds.stats, tc, [&](const TrainLogEntry& e) {
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g\n", e.iteration, e.learning_rate,
                  e.loss.total, e.loss.ce, e.loss.l1);
    loss_csv += line;
    if (options.log) {
      *options.log << "iter " << e.iteration << " loss " << e.loss.total << " (ce " << e.loss.ce
                   << ", l1 " << e.loss.l1 << ")\n";
    }
  });
  summary.final = EvaluateLoss(net, samples, tc.lambda);
  net.norm_stats_ref = (config.DataDir() / ds.manifest.norm_stats_file).string();
  net.Save(ckpt);

  WriteFile(fs::path(config.out) / "train_loss.csv", loss_csv);
  const json sj = {{"samples", summary.samples},
                   {"iterations", summary.iterations},
                   {"seed", tc.seed},
                   {"initial", {{"total", summary.initial.total},
                                {"ce", summary.initial.ce},
                                {"l1", summary.initial.l1}}},
                   {"final", {{"total", summary.final.total},
                              {"ce", summary.final.ce},
                              {"l1", summary.final.l1}}},
                   {"final_over_initial", summary.final.total / summary.initial.total}};
  WriteFile(fs::path(config.out) / "train_summary.json", sj.dump(2) + "\n");
  EchoConfig(config);
  if (options.log) {
    *options.log << "loss " << summary.initial.total << " -> " << summary.final.total
                 << "; checkpoint " << ckpt.string() << "\n";
  }
  return summary;
}

std::uint64_t EpisodeSeed(std::uint64_t seed, PerturbMode mode, int episode) {
  return DeriveSeed(DeriveSeed(seed, 100 + static_cast<std::uint64_t>(mode)),
                    static_cast<std::uint64_t>(episode));
}

SuiteRun RunSuite(const PolicyNet& net, const ExperimentConfig& config, const SuiteSpec& suite) {
  std::vector<PerturbMode> modes;
  for (const std::string& c : suite.conditions) modes.push_back(ParsePerturbMode(c));
  std::vector<EnsemblerKind> kinds;
  for (const std::string& m : suite.methods) kinds.push_back(ParseEnsemblerKind(m));
  if (modes.empty() || kinds.empty() || suite.episodes < 1) {
    throw ConfigError("empty evaluation suite");
  }
  config.ensembler.adahorizon.Validate(net.shape().chunk_length);
  const KinematicChain chain = LoadChain(config);

  const int per_condition = static_cast<int>(kinds.size()) * suite.episodes;
  const int total = static_cast<int>(modes.size()) * per_condition;
  SuiteRun run;
  run.episodes.resize(total);
  ParallelFor(total, config.jobs, [&](int idx) {
    const int c = idx / per_condition;
    const int m = (idx % per_condition) / suite.episodes;
    const int e = idx % suite.episodes;
    EpisodeSpec spec;
    spec.task = TaskSpec::FromInstruction(e % kNumInstructions);
    spec.perturb = config.perturb;
    spec.perturb.mode = modes[c];
    spec.perturb.actuation_noise = suite.actuation_noise;
    spec.seed = EpisodeSeed(config.seed, modes[c], e);
    spec.ensembler = config.ensembler;
    spec.ensembler.kind = kinds[m];
    spec.sim = config.sim;
    spec.log_pwm = suite.log_pwm;
    spec.chain = &chain;

    EpisodeRecord& rec = run.episodes[idx];
    rec.condition = std::string(ToString(modes[c]));
    rec.method = std::string(ToString(kinds[m]));
    rec.episode = e;
    rec.seed = spec.seed;
    rec.instruction_id = spec.task.instruction_id;
    rec.result = RunEpisode(net, spec);
  });

  std::vector<CellTotals> pooled(kinds.size());
  for (std::size_t c = 0; c < modes.size(); ++c) {
    for (std::size_t m = 0; m < kinds.size(); ++m) {
      CellTotals cell;
      for (int e = 0; e < suite.episodes; ++e) {
        const EpisodeRecord& rec = run.episodes[c * per_condition + m * suite.episodes + e];
        Accumulate(cell, rec.result);
        Accumulate(pooled[m], rec.result);
      }
      run.table.rows.push_back(ResultsRow::FromTotals(std::string(ToString(modes[c])),
                                                      std::string(ToString(kinds[m])), cell,
                                                      config.sim.dt));
    }
  }
  if (suite.pooled_rows) {
    for (std::size_t m = 0; m < kinds.size(); ++m) {
      run.table.rows.push_back(ResultsRow::FromTotals(
          "suite", std::string(ToString(kinds[m])), pooled[m], config.sim.dt));
    }
  }
  return run;
}

void WriteSuiteOutputs(const SuiteRun& run, const ExperimentConfig& config,
                       const std::string& title) {
  const fs::path out(config.out);
  WriteFile(out / "results.csv", run.table.ToCsv());
  WriteFile(out / "results.md", run.table.ToMarkdown(title));
  std::string log;
  for (const EpisodeRecord& r : run.episodes) log += EpisodeToJson(r).dump() + "\n";
  WriteFile(out / "episodes.log", log);
  EchoConfig(config);
}

SuiteRun RunEval(const ExperimentConfig& config, const CommandOptions& options) {
  const PolicyNet net = LoadCheckpoint(config);
  SuiteSpec suite;
  suite.conditions = config.eval.conditions;
  suite.methods = config.eval.methods;
  suite.episodes = config.eval.episodes;
  suite.actuation_noise = config.perturb.actuation_noise;
  suite.log_pwm = config.eval.log_pwm;
  SuiteRun run = RunSuite(net, config, suite);
  WriteSuiteOutputs(run, config, "Success rate by condition");
  if (options.log) *options.log << run.table.ToMarkdown("Success rate by condition");
  return run;
}

SuiteRun RunBenchEnsemblers(const ExperimentConfig& config, const CommandOptions& options) {
  const PolicyNet net = LoadCheckpoint(config);
  SuiteSpec suite;
  suite.conditions = config.bench.conditions;
  suite.methods = config.bench.methods;
  suite.episodes = config.bench.episodes;
  suite.actuation_noise = config.bench.actuation_noise;
  suite.pooled_rows = true;
  SuiteRun run = RunSuite(net, config, suite);
  WriteSuiteOutputs(run, config, "Comparison of action ensemblers");
  if (options.log) *options.log << run.table.ToMarkdown("Comparison of action ensemblers");
  return run;
}

LatencyReport RunBenchLatency(const ExperimentConfig& config, const CommandOptions& options) {
  using Clock = std::chrono::steady_clock;
  const PolicyNet net = LoadCheckpoint(config);
  const int k = net.shape().chunk_length;
  if (k < 1) throw ConfigError("chunk length must be >= 1");
  config.ensembler.adahorizon.Validate(k);

  // In-distribution observations at assorted points of expert rollouts.
  std::vector<Observation> observations;
  for (int i = 0; i < 64; ++i) {
    const TaskSpec task = TaskSpec::FromInstruction(i % kNumInstructions);
    WorldState s = Reset(task, PerturbSpec{}, DeriveSeed(config.seed, 5000 + i), config.sim);
    for (int t = 0; t < i % 16 && !IsSuccess(s, config.sim); ++t) {
      s = Step(s, ScriptedExpert(s, config.sim), config.sim);
    }
    observations.push_back(Observe(s));
  }

  LatencyReport report;
  std::vector<double> ns;
  std::vector<DualChunk> chunks;
  const int fwd_total = config.latency.warmup + config.latency.forward_iterations;
  for (int i = 0; i < fwd_total; ++i) {
    const Observation& obs = observations[i % observations.size()];
    const auto start = Clock::now();
    DualChunk chunk = net.Forward(obs);
    const auto stop = Clock::now();
    if (i >= config.latency.warmup) {
      ns.push_back(std::chrono::duration<double, std::nano>(stop - start).count());
    }
    if (i < static_cast<int>(observations.size())) chunks.push_back(std::move(chunk));
  }
  report.forward = Summarize(ns, 0.0);

  for (EnsemblerKind kind : AllEnsemblerKinds()) {
    EnsemblerConfig ec = config.ensembler;
    ec.kind = kind;
    report.ensemblers[std::string(ToString(kind))] = TimeEnsembler(
        ec, net.stats(), chunks, config.latency.warmup, config.latency.iterations);
  }
  EnsemblerConfig forced = config.ensembler;
  forced.kind = EnsemblerKind::kAdaHorizon;
  forced.adahorizon.replan_threshold = std::numeric_limits<double>::infinity();
  forced.adahorizon.threshold = std::numeric_limits<double>::min();
  report.always_min =
      TimeEnsembler(forced, net.stats(), chunks, config.latency.warmup, config.latency.iterations);
  forced.adahorizon.threshold = std::numeric_limits<double>::infinity();
  report.always_max =
      TimeEnsembler(forced, net.stats(), chunks, config.latency.warmup, config.latency.iterations);

  report.min_rate = report.always_min.mean_horizon /
                    ((report.forward.median_ns + report.always_min.median_ns) * 1e-9);
  report.max_rate = report.always_max.mean_horizon /
                    ((report.forward.median_ns + report.always_max.median_ns) * 1e-9);
  report.span_ratio = report.max_rate / report.min_rate;

  std::string csv = "component,method,iterations,median_us,p99_us,mean_horizon\n";
  std::string md = "# Latency\n\n| component | method | iterations | median (us) | p99 (us) | "
                   "mean horizon |\n|---|---|---:|---:|---:|---:|\n";
  auto add = [&](const std::string& component, const std::string& method, const TimingStats& t) {
    const std::string it = std::to_string(t.iterations);
    const std::string med = Format("%.3f", t.median_ns / 1e3);
    const std::string p99 = Format("%.3f", t.p99_ns / 1e3);
    const std::string h = Format("%.3f", t.mean_horizon);
    csv += component + "," + method + "," + it + "," + med + "," + p99 + "," + h + "\n";
    md += "| " + component + " | " + method + " | " + it + " | " + med + " | " + p99 + " | " + h +
          " |\n";
  };
  add("forward", "policy", report.forward);
  for (const auto& [name, t] : report.ensemblers) add("ensembler", name, t);
  add("ensembler", "adahorizon_always_min", report.always_min);
  add("ensembler", "adahorizon_always_max", report.always_max);
  md += "\n| effective rate | actions/s |\n|---|---:|\n";
  md += "| horizon " + Format("%.0f", report.always_min.mean_horizon) + " | " +
        Format("%.1f", report.min_rate) + " |\n";
  md += "| horizon " + Format("%.0f", report.always_max.mean_horizon) + " | " +
        Format("%.1f", report.max_rate) + " |\n";
  md += "| span ratio | " + Format("%.3f", report.span_ratio) + " |\n";

  const fs::path out(config.out);
  WriteFile(out / "latency.csv", csv);
  WriteFile(out / "latency.md", md);
  EchoConfig(config);
  if (options.log) *options.log << md;
  return report;
}

IkReport RunIkCheck(const ExperimentConfig& config, const CommandOptions& options) {
  const KinematicChain chain = LoadChain(config);
  IkReport report;
  const JointAngles zero{};
  report.wrist_reach_mm = WristPosition(chain, zero).norm();
  report.tip_reach_mm = Fk(chain, zero).position_mm.norm();
  const double probe_angles[3] = {0.0, std::numbers::pi / 2.0, std::numbers::pi};
  for (int i = 0; i < 3; ++i) {
    JointAngles q{};
    q[0] = probe_angles[i];
    report.ticks[i] = AnglesToPwm(q, chain.servo)[0];
  }

  const int n = config.kinematics.targets;
  std::vector<IkResult> results(n);
  ParallelFor(n, config.jobs, [&](int i) {
    std::mt19937_64 rng(DeriveSeed(config.seed, 7000 + static_cast<std::uint64_t>(i)));
    JointAngles q{};
    for (int j = 0; j < kNumJoints; ++j) {
      std::uniform_real_distribution<double> u(chain.joints[j].min_rad, chain.joints[j].max_rad);
      q[j] = u(rng);
    }
    IkOptions opts;
    opts.seed = DeriveSeed(config.seed, 9000 + static_cast<std::uint64_t>(i));
    results[i] = Ik(chain, Fk(chain, q), zero, opts);
  });
  double iterations = 0.0;
  for (const IkResult& r : results) {
    if (r.converged) ++report.converged;
    report.worst_position_error_mm = std::max(report.worst_position_error_mm, r.position_error_mm);
    report.worst_orientation_error_rad =
        std::max(report.worst_orientation_error_rad, r.orientation_error_rad);
    iterations += r.iterations;
  }
  report.targets = n;
  report.mean_iterations = iterations / n;

  Pose probe;
  probe.position_mm = Eigen::Vector3d(config.kinematics.probe_mm, 0.0, 0.0);
  try {
    const IkResult r = Ik(chain, probe, zero);
    report.probe_message = r.converged ? "converged" : "not converged";
  } catch (const UnreachableError& e) {
    report.probe_unreachable = true;
    report.probe_message = e.what();
  }

  std::string csv = "metric,value\n";
  std::string md = "# Kinematics check\n\n| metric | value |\n|---|---|\n";
  auto add = [&](const std::string& key, const std::string& value) {
    csv += key + "," + value + "\n";
    md += "| " + key + " | " + value + " |\n";
  };
  add("wrist_reach_mm", Format("%.3f", report.wrist_reach_mm));
  add("tip_reach_mm", Format("%.3f", report.tip_reach_mm));
  add("pwm_tick_0", std::to_string(report.ticks[0]));
  add("pwm_tick_half_pi", std::to_string(report.ticks[1]));
  add("pwm_tick_pi", std::to_string(report.ticks[2]));
  add("ik_targets", std::to_string(report.targets));
  add("ik_converged", std::to_string(report.converged));
  add("ik_worst_position_error_mm", Format("%.6f", report.worst_position_error_mm));
  add("ik_worst_orientation_error_rad", Format("%.6f", report.worst_orientation_error_rad));
  add("ik_mean_iterations", Format("%.2f", report.mean_iterations));
  add("probe_mm", Format("%.1f", config.kinematics.probe_mm));
  add("probe_result", report.probe_unreachable ? "unreachable" : report.probe_message);

  const fs::path out(config.out);
  WriteFile(out / "ik_report.csv", csv);
  WriteFile(out / "ik_report.md", md);
  EchoConfig(config);
  if (options.log) *options.log << md;
  return report;
}

}  // namespace chunkrt::harness
