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

#ifndef CHUNKRT_POLICY_HPP_
#define CHUNKRT_POLICY_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chunkrt/actionspace.hpp"
#include "chunkrt/ensemble.hpp"

namespace chunkrt {

inline constexpr int kNumInstructions = 9;
// ee_pos(3) + ee_euler(3) + grip(1) + object_pos(3) + goal_pos(3).
inline constexpr int kStateFeatures = 13;

using Vec3 = std::array<double, 3>;

// Low-dimensional stand-in for (image, instruction).
struct Observation {
  Vec3 ee_pos{};
  Vec3 ee_euler{};
  double grip_state = 0.0;
  Vec3 object_pos{};
  Vec3 goal_pos{};
  int instruction_id = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// State features followed by the instruction one-hot. Throws ConfigError
// when instruction_id is outside [0, num_instructions).
Eigen::VectorXd Featurize(const Observation& obs,
                          int num_instructions = kNumInstructions);

struct PolicyShape {
  int num_instructions = kNumInstructions;
  std::vector<int> hidden = {256, 256};
  int chunk_length = kDefaultChunkLength;
  int num_bins = kNumBins;

  int input_dim() const { return kStateFeatures + num_instructions; }
  int cont_outputs() const { return chunk_length * kActionDim; }
  int disc_outputs() const { return chunk_length * kActionDim * num_bins; }
  void Validate() const;

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

struct TrainConfig {
  double lambda = 1.0;     // weight of the L1 term
  double ce_weight = 1.0;  // weight of the CE term; 0 trains the L1 head alone
  double learning_rate = 3e-3;
  int batch_size = 64;
  int iterations = 6000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Cosine schedule from learning_rate down to learning_rate * lr_floor.
  bool cosine_decay = true;
  double lr_floor = 0.05;
  int log_every = 50;

  void Validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double ce = 0.0;
  double l1 = 0.0;
};

// One supervised pair: observation and its K-step target chunk.
struct TrainingSample {
  Observation obs;
  ActionChunk target;
};

// Dense training batch in the layout the network consumes.
struct Batch {
  Eigen::MatrixXd features;    // input_dim x B (unscaled)
  Eigen::MatrixXd targets;     // K*D x B normalized targets
  Eigen::MatrixXi tokens;      // K*D x B bin indices
  int size() const { return static_cast<int>(features.cols()); }
};

// Flat parameter / gradient storage. Aligned like Eigen's own buffers so the
// vectorized kernels see the same layout on every allocation, which keeps
// results bit-identical between runs.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

class PolicyNet;

Batch MakeBatch(const PolicyNet& net, std::span<const TrainingSample> samples);

// Multilayer tanh trunk shared by a continuous head (K*D normalized values)
// and a discrete head (K*D*bins logits). All parameters live in one flat
// vector so optimizers and finite-difference checks can address them
// uniformly.
class PolicyNet {
 public:
  // Zero weights, identity input scaling.
  PolicyNet(PolicyShape shape, NormStats stats);

  // Glorot-uniform weights, zero biases.
  static PolicyNet Initialize(PolicyShape shape, NormStats stats,
                              std::uint64_t seed);

  DualChunk Forward(const Observation& obs) const;

  // Softmax probabilities for one observation, laid out [(t * D + d) * bins + b].
  std::vector<double> Probabilities(const Observation& obs) const;

  LossBreakdown Loss(const Observation& obs, const ActionChunk& target,
                     double lambda) const;
  // Batch-mean loss; fills `grad` (resized to parameter_count()) when given.
  LossBreakdown LossAndGradient(const Batch& batch, double lambda,
                                double ce_weight,
                                ParamVector* grad) const;

  const PolicyShape& shape() const { return shape_; }
  const NormStats& stats() const { return stats_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  // Flat-vector ranges for named blocks.
  struct Block {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
  };
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(const std::string& name) const;

  // Per-feature affine input scaling: (x - mean) / scale.
  void SetInputScaling(Eigen::VectorXd mean, Eigen::VectorXd scale);
  const Eigen::VectorXd& input_mean() const { return input_mean_; }
  const Eigen::VectorXd& input_scale() const { return input_scale_; }

  // Free-form provenance stored in checkpoints.
  TrainConfig train_config;
  std::string norm_stats_ref;

  void Save(const std::filesystem::path& path) const;
  static PolicyNet Load(const std::filesystem::path& path);

 private:
  struct Activations;
  void ForwardBatch(const Eigen::MatrixXd& features, Activations& acts) const;

  Eigen::Map<const Eigen::MatrixXd> Matrix(const Block& b) const;
  Eigen::Map<Eigen::MatrixXd> Matrix(const Block& b);

  PolicyShape shape_;
  NormStats stats_;
  ParamVector params_;
  std::vector<Block> blocks_;
  Eigen::VectorXd input_mean_;
  Eigen::VectorXd input_scale_;
};

struct TrainLogEntry {
  int iteration = 0;
  double learning_rate = 0.0;
  LossBreakdown loss;  // minibatch loss
};

// Mean loss over `samples`, evaluated in chunks of `chunk` samples.
LossBreakdown EvaluateLoss(const PolicyNet& net,
                           std::span<const TrainingSample> samples,
                           double lambda, int chunk = 512);

// Initialized network with input scaling fitted to `samples`; Train starts
// from exactly this network.
PolicyNet InitialNet(std::span<const TrainingSample> samples, const PolicyShape& shape,
                     const NormStats& stats, const TrainConfig& config);

// Adam on minibatches drawn by seeded epoch shuffling. Input scaling is set
// from the dataset's feature mean / std. Deterministic for a fixed seed.
// Throws ConfigError on an empty dataset.
PolicyNet Train(std::span<const TrainingSample> samples, const PolicyShape& shape,
                const NormStats& stats, const TrainConfig& config,
                const std::function<void(const TrainLogEntry&)>& on_log = {});

}  // namespace chunkrt

#endif  // CHUNKRT_POLICY_HPP_
