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

#include "chunkrt/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <numbers>
#include <random>

#include <json.hpp>

#include "chunkrt/error.hpp"
#include "chunkrt/noise.hpp"

namespace chunkrt {
namespace {

using json = nlohmann::json;

constexpr char kCheckpointMagic[8] = {'C', 'H', 'K', 'R', 'T', 'N', 'E', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointFormat[] = "chunkrt-policy/1";
constexpr double kMinProbability = 1e-300;

json TrainConfigToJson(const TrainConfig& c) {
  return {{"lambda", c.lambda},           {"ce_weight", c.ce_weight},
          {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"iterations", c.iterations},   {"seed", c.seed},
          {"beta1", c.beta1},             {"beta2", c.beta2},
          {"epsilon", c.epsilon},         {"cosine_decay", c.cosine_decay},
          {"lr_floor", c.lr_floor},       {"log_every", c.log_every}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.ce_weight = j.at("ce_weight").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.iterations = j.at("iterations").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.cosine_decay = j.at("cosine_decay").get<bool>();
  c.lr_floor = j.at("lr_floor").get<double>();
  c.log_every = j.at("log_every").get<int>();
  return c;
}

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd FromStd(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::VectorXd Featurize(const Observation& obs, int num_instructions) {
  if (obs.instruction_id < 0 || obs.instruction_id >= num_instructions) {
    throw ConfigError("instruction_id " + std::to_string(obs.instruction_id) +
                      " outside [0, " + std::to_string(num_instructions) + ")");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kStateFeatures + num_instructions);
  int i = 0;
  for (double v : obs.ee_pos) x[i++] = v;
  for (double v : obs.ee_euler) x[i++] = v;
  x[i++] = obs.grip_state;
  for (double v : obs.object_pos) x[i++] = v;
  for (double v : obs.goal_pos) x[i++] = v;
  x[kStateFeatures + obs.instruction_id] = 1.0;
  return x;
}

void PolicyShape::Validate() const {
  if (num_instructions < 1) throw ConfigError("num_instructions must be >= 1");
  if (hidden.empty()) throw ConfigError("policy needs at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer width must be >= 1");
  }
  if (chunk_length < 1) throw ConfigError("chunk_length must be >= 1");
  if (num_bins < 2) throw ConfigError("num_bins must be >= 2");
}

void TrainConfig::Validate() const {
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (ce_weight < 0.0) throw ConfigError("ce_weight must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
}

struct PolicyNet::Activations {
  std::vector<Eigen::MatrixXd> layers;  // [0] scaled input, then tanh outputs
  Eigen::MatrixXd cont;                 // K*D x B
  Eigen::MatrixXd probs;                // K*D*bins x B
};

PolicyNet::PolicyNet(PolicyShape shape, NormStats stats)
    : shape_(std::move(shape)), stats_(stats) {
  shape_.Validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    blocks_.push_back({std::move(name), offset, rows, cols});
    offset += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  };
  int fan_in = shape_.input_dim();
  for (std::size_t l = 0; l < shape_.hidden.size(); ++l) {
    add("trunk" + std::to_string(l) + ".w", shape_.hidden[l], fan_in);
    add("trunk" + std::to_string(l) + ".b", shape_.hidden[l], 1);
    fan_in = shape_.hidden[l];
  }
  add("cont.w", shape_.cont_outputs(), fan_in);
  add("cont.b", shape_.cont_outputs(), 1);
  add("disc.w", shape_.disc_outputs(), fan_in);
  add("disc.b", shape_.disc_outputs(), 1);
  params_.assign(offset, 0.0);
  input_mean_ = Eigen::VectorXd::Zero(shape_.input_dim());
  input_scale_ = Eigen::VectorXd::Ones(shape_.input_dim());
}

PolicyNet PolicyNet::Initialize(PolicyShape shape, NormStats stats,
                                std::uint64_t seed) {
  PolicyNet net(std::move(shape), stats);
  std::mt19937_64 rng(seed);
  for (const Block& b : net.blocks_) {
    if (b.cols == 1) continue;  // biases stay zero
    const double limit = std::sqrt(6.0 / (b.rows + b.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto m = net.Matrix(b);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  }
  return net;
}

const PolicyNet::Block& PolicyNet::block(const std::string& name) const {
  for (const Block& b : blocks_) {
    if (b.name == name) return b;
  }
  throw ConfigError("no parameter block '" + name + "'");
}

Eigen::Map<const Eigen::MatrixXd> PolicyNet::Matrix(const Block& b) const {
  return {params_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Eigen::MatrixXd> PolicyNet::Matrix(const Block& b) {
  return {params_.data() + b.offset, b.rows, b.cols};
}

void PolicyNet::SetInputScaling(Eigen::VectorXd mean, Eigen::VectorXd scale) {
  if (mean.size() != shape_.input_dim() || scale.size() != shape_.input_dim()) {
    throw ConfigError("input scaling has wrong dimension");
  }
  if ((scale.array() <= 0.0).any()) throw ConfigError("input scale must be > 0");
  input_mean_ = std::move(mean);
  input_scale_ = std::move(scale);
}

void PolicyNet::ForwardBatch(const Eigen::MatrixXd& features,
                             Activations& acts) const {
  const std::size_t depth = shape_.hidden.size();
  acts.layers.resize(depth + 1);
  acts.layers[0] = (features.colwise() - input_mean_).array().colwise() /
                   input_scale_.array();
  for (std::size_t l = 0; l < depth; ++l) {
    const auto w = Matrix(blocks_[2 * l]);
    const auto b = Matrix(blocks_[2 * l + 1]);
    Eigen::MatrixXd& out = acts.layers[l + 1];
    out.resize(w.rows(), features.cols());
    out.noalias() = w * acts.layers[l];
    out.colwise() += b.col(0);
    out = out.array().tanh();
  }
  const Eigen::MatrixXd& top = acts.layers[depth];
  const auto cw = Matrix(blocks_[2 * depth]);
  const auto cb = Matrix(blocks_[2 * depth + 1]);
  const auto dw = Matrix(blocks_[2 * depth + 2]);
  const auto db = Matrix(blocks_[2 * depth + 3]);

  acts.cont.resize(cw.rows(), features.cols());
  acts.cont.noalias() = cw * top;
  acts.cont.colwise() += cb.col(0);

  acts.probs.resize(dw.rows(), features.cols());
  acts.probs.noalias() = dw * top;
  acts.probs.colwise() += db.col(0);

  // One softmax per (sample, t, d): columns of a bins x (K*D*B) view.
  const Eigen::Index bins = shape_.num_bins;
  Eigen::Map<Eigen::MatrixXd> grid(acts.probs.data(), bins,
                                   acts.probs.size() / bins);
  for (Eigen::Index j = 0; j < grid.cols(); ++j) {
    auto col = grid.col(j);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
}

DualChunk PolicyNet::Forward(const Observation& obs) const {
  Activations acts;
  ForwardBatch(Featurize(obs, shape_.num_instructions), acts);
  const int steps = shape_.chunk_length;
  const int bins = shape_.num_bins;
  DualChunk out;
  out.cont.actions.resize(steps);
  out.disc.actions.resize(steps);
  out.disc_conf.assign(steps, 0.0);
  for (int t = 0; t < steps; ++t) {
    NormalizedAction cont{};
    ActionTokens tokens{};
    double conf = 0.0;
    for (int d = 0; d < kActionDim; ++d) {
      const int row = t * kActionDim + d;
      cont[d] = acts.cont(row, 0);
      const double* p = acts.probs.data() + static_cast<std::ptrdiff_t>(row) * bins;
      const double* best = std::max_element(p, p + bins);
      tokens[d] = static_cast<int>(best - p);
      conf += *best;
    }
    out.cont[t] = stats_.Denormalize(cont);
    out.disc[t] = Dequantize(tokens, stats_, bins);
    out.disc_conf[t] = conf / kActionDim;
  }
  return out;
}

std::vector<double> PolicyNet::Probabilities(const Observation& obs) const {
  Activations acts;
  ForwardBatch(Featurize(obs, shape_.num_instructions), acts);
  return std::vector<double>(acts.probs.data(), acts.probs.data() + acts.probs.size());
}

Batch MakeBatch(const PolicyNet& net, std::span<const TrainingSample> samples) {
  const PolicyShape& shape = net.shape();
  const int outputs = shape.cont_outputs();
  Batch batch;
  batch.features.resize(shape.input_dim(), static_cast<Eigen::Index>(samples.size()));
  batch.targets.resize(outputs, static_cast<Eigen::Index>(samples.size()));
  batch.tokens.resize(outputs, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    batch.features.col(col) = Featurize(samples[i].obs, shape.num_instructions);
    if (samples[i].target.size() != shape.chunk_length) {
      throw ConfigError("target chunk length does not match the policy");
    }
    for (int t = 0; t < shape.chunk_length; ++t) {
      const NormalizedAction x = net.stats().Normalize(samples[i].target[t]);
      for (int d = 0; d < kActionDim; ++d) {
        batch.targets(t * kActionDim + d, col) = x[d];
        batch.tokens(t * kActionDim + d, col) = QuantizeValue(x[d], shape.num_bins);
      }
    }
  }
  return batch;
}

LossBreakdown PolicyNet::Loss(const Observation& obs, const ActionChunk& target,
                              double lambda) const {
  const TrainingSample sample{obs, target};
  return LossAndGradient(MakeBatch(*this, std::span(&sample, 1)), lambda, 1.0,
                         nullptr);
}

LossBreakdown PolicyNet::LossAndGradient(const Batch& batch, double lambda,
                                         double ce_weight,
                                         ParamVector* grad) const {
  Activations acts;
  ForwardBatch(batch.features, acts);
  const Eigen::Index count = batch.size();
  const Eigen::Index bins = shape_.num_bins;
  const Eigen::Index outputs = shape_.cont_outputs();
  const double scale = 1.0 / static_cast<double>(outputs * count);

  LossBreakdown loss;
  Eigen::Map<Eigen::MatrixXd> grid(acts.probs.data(), bins, outputs * count);
  for (Eigen::Index j = 0; j < grid.cols(); ++j) {
    const int token = batch.tokens.data()[j];
    loss.ce -= std::log(std::max(grid(token, j), kMinProbability));
  }
  loss.ce *= scale;
  loss.l1 = (acts.cont - batch.targets).cwiseAbs().sum() * scale;
  loss.total = ce_weight * loss.ce + lambda * loss.l1;
  if (grad == nullptr) return loss;

  grad->assign(params_.size(), 0.0);
  auto grad_block = [&](const Block& b) {
    return Eigen::Map<Eigen::MatrixXd>(grad->data() + b.offset, b.rows, b.cols);
  };
  const std::size_t depth = shape_.hidden.size();
  const Eigen::MatrixXd& top = acts.layers[depth];
  const Block& cw = blocks_[2 * depth];
  const Block& cb = blocks_[2 * depth + 1];
  const Block& dw = blocks_[2 * depth + 2];
  const Block& db = blocks_[2 * depth + 3];

  // d/dlogits = ce_weight * (p - onehot) * scale, computed in place.
  Eigen::MatrixXd& dlogits = acts.probs;
  for (Eigen::Index j = 0; j < grid.cols(); ++j) grid(batch.tokens.data()[j], j) -= 1.0;
  dlogits *= ce_weight * scale;

  const Eigen::MatrixXd dcont =
      (lambda * scale) * (acts.cont - batch.targets).array().sign().matrix();

  grad_block(dw).noalias() = dlogits * top.transpose();
  grad_block(db) = dlogits.rowwise().sum();
  grad_block(cw).noalias() = dcont * top.transpose();
  grad_block(cb) = dcont.rowwise().sum();

  Eigen::MatrixXd dtop(top.rows(), count);
  dtop.noalias() = Matrix(dw).transpose() * dlogits;
  dtop.noalias() += Matrix(cw).transpose() * dcont;

  for (std::size_t l = depth; l-- > 0;) {
    const Eigen::MatrixXd& h = acts.layers[l + 1];
    const Eigen::MatrixXd dpre = dtop.array() * (1.0 - h.array().square());
    grad_block(blocks_[2 * l]).noalias() = dpre * acts.layers[l].transpose();
    grad_block(blocks_[2 * l + 1]) = dpre.rowwise().sum();
    if (l > 0) {
      dtop.resize(acts.layers[l].rows(), count);
      dtop.noalias() = Matrix(blocks_[2 * l]).transpose() * dpre;
    }
  }
  return loss;
}

void PolicyNet::Save(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint writer assumes a little-endian host");
  json layers = json::array();
  for (const Block& b : blocks_) {
    layers.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols},
                      {"offset", b.offset}});
  }
  const json header = {
      {"format", kCheckpointFormat},
      {"endianness", "little"},
      {"scalar", "float64"},
      {"action_dim", kActionDim},
      {"chunk_length", shape_.chunk_length},
      {"num_bins", shape_.num_bins},
      {"num_instructions", shape_.num_instructions},
      {"hidden", shape_.hidden},
      {"activation", "tanh"},
      {"layers", layers},
      {"param_count", params_.size()},
      {"norm_stats", {{"lo", stats_.lo()}, {"hi", stats_.hi()}}},
      {"norm_stats_ref", norm_stats_ref},
      {"input_mean", ToStd(input_mean_)},
      {"input_scale", ToStd(input_scale_)},
      {"optimizer", "adam"},
      {"train_config", TrainConfigToJson(train_config)},
  };
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint64_t header_size = text.size();
  const std::uint64_t count = params_.size();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));
  out.write(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw Error("short write to " + path.string());
}

PolicyNet PolicyNet::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  std::uint32_t version = 0;
  std::uint64_t header_size = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_size), sizeof(header_size));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw FormatError("not a chunkrt checkpoint: " + path.string());
  }
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  if (header_size > (1u << 26)) throw FormatError("checkpoint header too large");
  std::string text(header_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw FormatError("truncated checkpoint header");

  try {
    const json header = json::parse(text);
    if (header.at("format") != kCheckpointFormat) throw FormatError("bad checkpoint format tag");
    if (header.at("action_dim").get<int>() != kActionDim) {
      throw FormatError("checkpoint action_dim mismatch");
    }
    PolicyShape shape;
    shape.chunk_length = header.at("chunk_length").get<int>();
    shape.num_bins = header.at("num_bins").get<int>();
    shape.num_instructions = header.at("num_instructions").get<int>();
    shape.hidden = header.at("hidden").get<std::vector<int>>();
    const NormStats stats(header.at("norm_stats").at("lo").get<std::array<double, kActionDim>>(),
                          header.at("norm_stats").at("hi").get<std::array<double, kActionDim>>());
    PolicyNet net(shape, stats);
    net.norm_stats_ref = header.at("norm_stats_ref").get<std::string>();
    net.train_config = TrainConfigFromJson(header.at("train_config"));
    net.SetInputScaling(FromStd(header.at("input_mean").get<std::vector<double>>()),
                        FromStd(header.at("input_scale").get<std::vector<double>>()));

    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || count != net.params_.size() ||
        header.at("param_count").get<std::uint64_t>() != count) {
      throw FormatError("checkpoint parameter count mismatch");
    }
    in.read(reinterpret_cast<char*>(net.params_.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw FormatError("truncated checkpoint weights");
    return net;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

LossBreakdown EvaluateLoss(const PolicyNet& net,
                           std::span<const TrainingSample> samples,
                           double lambda, int chunk) {
  LossBreakdown sum;
  if (samples.empty()) return sum;
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const std::size_t n = std::min<std::size_t>(chunk, samples.size() - start);
    const LossBreakdown part =
        net.LossAndGradient(MakeBatch(net, samples.subspan(start, n)), lambda, 1.0, nullptr);
    const double w = static_cast<double>(n);
    sum.total += part.total * w;
    sum.ce += part.ce * w;
    sum.l1 += part.l1 * w;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  sum.total *= inv;
  sum.ce *= inv;
  sum.l1 *= inv;
  return sum;
}

PolicyNet InitialNet(std::span<const TrainingSample> samples, const PolicyShape& shape,
                     const NormStats& stats, const TrainConfig& config) {
  if (samples.empty()) throw ConfigError("empty dataset");
  config.Validate();
  PolicyNet net = PolicyNet::Initialize(shape, stats, config.seed);
  net.train_config = config;

  const Batch all = MakeBatch(net, samples);
  const Eigen::Index n = all.size();
  const Eigen::VectorXd mean = all.features.rowwise().mean();
  Eigen::VectorXd scale =
      ((all.features.colwise() - mean).array().square().rowwise().sum() /
       static_cast<double>(n))
          .sqrt();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-6)) scale[i] = 1.0;
  }
  net.SetInputScaling(mean, scale);
  return net;
}

PolicyNet Train(std::span<const TrainingSample> samples, const PolicyShape& shape,
                const NormStats& stats, const TrainConfig& config,
                const std::function<void(const TrainLogEntry&)>& on_log) {
  PolicyNet net = InitialNet(samples, shape, stats, config);
  const Batch all = MakeBatch(net, samples);
  const Eigen::Index n = all.size();

  const std::size_t count = net.parameter_count();
  ParamVector grad;
  std::vector<double> m(count, 0.0);
  std::vector<double> v(count, 0.0);
  std::span<double> params = net.parameters();

  std::mt19937_64 rng(DeriveSeed(config.seed, 1));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  const int batch_size = static_cast<int>(std::min<Eigen::Index>(config.batch_size, n));
  Batch batch;
  batch.features.resize(all.features.rows(), batch_size);
  batch.targets.resize(all.targets.rows(), batch_size);
  batch.tokens.resize(all.tokens.rows(), batch_size);

  for (int it = 1; it <= config.iterations; ++it) {
    for (int b = 0; b < batch_size; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Eigen::Index src = order[cursor++];
      batch.features.col(b) = all.features.col(src);
      batch.targets.col(b) = all.targets.col(src);
      batch.tokens.col(b) = all.tokens.col(src);
    }
    const LossBreakdown loss =
        net.LossAndGradient(batch, config.lambda, config.ce_weight, &grad);

    double lr = config.learning_rate;
    if (config.cosine_decay && config.iterations > 1) {
      const double progress = static_cast<double>(it - 1) / (config.iterations - 1);
      const double floor = config.learning_rate * config.lr_floor;
      lr = floor + 0.5 * (config.learning_rate - floor) *
                       (1.0 + std::cos(progress * std::numbers::pi));
    }
    const double c1 = 1.0 - std::pow(config.beta1, it);
    const double c2 = 1.0 - std::pow(config.beta2, it);
    for (std::size_t i = 0; i < count; ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
    }
    if (on_log && (it % config.log_every == 0 || it == config.iterations || it == 1)) {
      on_log({it, lr, loss});
    }
  }
  return net;
}

}  // namespace chunkrt
