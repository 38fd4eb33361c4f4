// Copyright 2026 The scenegen Authors
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

#ifndef SCENEGEN_POLICY_HPP_
#define SCENEGEN_POLICY_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenegen/expert.hpp"
#include "scenegen/randomize.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/simworld.hpp"
#include "scenegen/world.hpp"

namespace scenegen {

// Fixed-variance DDPM schedule. Step k runs from 1 to K; vectors are stored
// at index k - 1.
class NoiseSchedule {
 public:
  // Throws std::invalid_argument unless 0 < beta_1 <= ... <= beta_K < 1.
  static NoiseSchedule FromBetas(std::vector<double> betas);
  static NoiseSchedule Linear(int steps, double beta_first, double beta_last);
  // Linear schedule whose 1e-4 -> 0.02 endpoints are rescaled by 1000 / K
  // (capped at 0.5), so the forward process reaches near-pure noise for
  // small K.
  static NoiseSchedule Default(int steps = 50);

  int steps() const { return static_cast<int>(betas_.size()); }
  const std::vector<double>& betas() const { return betas_; }
  double beta(int k) const;
  double alpha(int k) const;
  // alpha_bar(0) = 1
  double alpha_bar(int k) const;
  // posterior standard deviation; sigma(1) = 0
  double sigma(int k) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::vector<double> sigmas_;
};

struct ChunkingConfig {
  int prediction_horizon = 16;
  int execution_horizon = 8;

  void validate() const;
};

struct NoisedChunk {
  Eigen::VectorXd x_k;
  Eigen::VectorXd epsilon;
};

// k = 0 returns x_0 unchanged; k outside [0, K] throws std::out_of_range.
NoisedChunk forward_noise(const Eigen::VectorXd& x0, int k, const NoiseSchedule& schedule,
                          Rng& rng);
Eigen::VectorXd forward_noise(const Eigen::VectorXd& x0, int k, const NoiseSchedule& schedule,
                              const Eigen::VectorXd& epsilon);

// Sinusoidal embedding of the diffusion step: sin / cos pairs over
// geometrically spaced frequencies.
Eigen::VectorXd timestep_embedding(int k, int dim);

// What the MLP body outputs before it is turned into a noise prediction:
// epsilon outputs the noise directly; sample outputs a clean-chunk
// estimate F with eps = (x_k - sqrt(alpha_bar_k) F) / sqrt(1 - alpha_bar_k).
enum class Parameterization { epsilon, sample };
Parameterization parse_parameterization(std::string_view name);
std::string parameterization_name(Parameterization p);

struct NetShape {
  Parameterization parameterization = Parameterization::epsilon;
  int chunk_dim = 0;
  int obs_dim = 0;
  int embed_dim = 32;
  int hidden = 256;
  int hidden_layers = 2;

  int input_dim() const { return chunk_dim + obs_dim + embed_dim; }
  // (rows, cols) of every weight matrix, input to output
  std::vector<std::pair<int, int>> layer_shapes() const;
  size_t num_parameters() const;
};

// MLP noise predictor eps(x_k, s, k) with SiLU activations. All parameters
// live in one flat vector: per layer, the column-major weight matrix
// followed by the bias. The sample parameterization needs the schedule.
class DenoiserNet {
 public:
  DenoiserNet() = default;
  DenoiserNet(NetShape shape, uint64_t seed, const NoiseSchedule* schedule = nullptr);

  const NetShape& shape() const { return shape_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& parameters() { return params_; }

  // Columns are samples.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x_k, const Eigen::MatrixXd& obs,
                          const std::vector<int>& ks) const;

  // Mean squared error of the raw network output against its target: the
  // noise `epsilon`, or for the sample parameterization the clean chunk
  // recovered from x_k and `epsilon`. Writes the analytic gradient of every parameter written to `gradient` if given.
  double loss(const Eigen::MatrixXd& x_k, const Eigen::MatrixXd& obs, const std::vector<int>& ks,
              const Eigen::MatrixXd& epsilon, Eigen::VectorXd* gradient) const;

 private:
  Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& x_k, const Eigen::MatrixXd& obs,
                                 const std::vector<int>& ks) const;

  // Per-sample factors (a, b) of eps = a x_k + b F.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> output_map(const std::vector<int>& ks) const;

  NetShape shape_;
  Eigen::VectorXd params_;
  std::vector<double> alpha_bars_;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string& what, long sample)
      : std::runtime_error(what), sample_(sample) {}
  long sample() const { return sample_; }

 private:
  long sample_;
};

// Mean over all entries of (prediction - epsilon)^2. Throws
// NonFiniteLossError naming the first offending sample (column).
double noise_mse(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& epsilon);

// Normalized training pairs; columns are samples.
struct TrainingBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd chunks;

  long size() const { return chunks.cols(); }
};

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

// Behavior-cloning denoising loss with k ~ U{1..K} and standard normal
// noise per sample.
LossResult bc_loss(const DenoiserNet& net, const TrainingBatch& batch,
                   const NoiseSchedule& schedule, Rng& rng);
// Same loss with the diffusion steps and noise given explicitly.
LossResult bc_loss(const DenoiserNet& net, const TrainingBatch& batch, const std::vector<int>& ks,
                   const Eigen::MatrixXd& epsilon, const NoiseSchedule& schedule);

struct SamplerOptions {
  // When positive, every step clamps the implied clean sample
  // x0 = (x_k - sqrt(1 - alpha_bar_k) eps) / sqrt(alpha_bar_k) to
  // [-clip_x0, clip_x0] and forms the posterior mean from it. Without an
  // active clamp this equals the plain epsilon-form mean.
  double clip_x0 = 0.0;
};

// Reverse process from x_K ~ N(0, I), in normalized units.
Eigen::VectorXd sample_chunk(const DenoiserNet& net, const Eigen::VectorXd& obs,
                             const NoiseSchedule& schedule, Rng& rng,
                             const SamplerOptions& options = {});
// Reverse process from a given x_K.
Eigen::VectorXd sample_chunk(const DenoiserNet& net, const Eigen::VectorXd& obs,
                             const NoiseSchedule& schedule, Rng& rng, Eigen::VectorXd x_K,
                             const SamplerOptions& options = {});

// Per-dimension affine map of [min, max] onto [-1, 1]. Dimensions whose
// spread is below kConstantSpread are only shifted on the way in and
// decode to their constant on the way out.
class Normalizer {
 public:
  static constexpr double kConstantSpread = 1e-9;

  Normalizer() = default;
  // A zero half range marks a constant dimension.
  Normalizer(Eigen::VectorXd center, Eigen::VectorXd half_range);
  // Columns are data points.
  static Normalizer Fit(const Eigen::MatrixXd& data);

  int dim() const { return static_cast<int>(center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& half_range() const { return half_range_; }
  bool constant(int i) const { return half_range_[i] == 0.0; }

  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& x) const;
  // Applies the map to a time-major chunk of `dim()`-sized blocks.
  Eigen::VectorXd normalize_chunk(const Eigen::VectorXd& chunk) const;
  Eigen::VectorXd denormalize_chunk(const Eigen::VectorXd& chunk) const;

 private:
  Eigen::VectorXd center_;
  Eigen::VectorXd half_range_;
  Eigen::VectorXd scale_;  // half range, or 1 for constant dimensions
};

// One demonstration as seen by the learner: observation and action columns
// per step.
struct PolicyEpisode {
  Eigen::MatrixXd observations;  // obs_dim x T
  Eigen::MatrixXd actions;       // Action::kDim x T
};

// Chunk starting at step t: T_p actions, padded past the end with zero
// motion and the last gripper command. Time-major.
Eigen::VectorXd action_chunk(const PolicyEpisode& episode, int t, int horizon);

enum class Optimizer { sgd, adam };
Optimizer parse_optimizer(std::string_view name);
std::string optimizer_name(Optimizer optimizer);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::sgd;
  double holdout_fraction = 0.1;
  uint64_t seed = 0;
  int diffusion_steps = 50;
  int hidden = 256;
  int embed_dim = 32;
  Parameterization parameterization = Parameterization::sample;
  ChunkingConfig chunking;
  // called after every epoch with (epoch, train loss, holdout loss)
  std::function<void(int, double, double)> on_epoch;

  void validate() const;
};

struct TrainLog {
  // loss on the training split before the first update and after the last
  // one, both with the same fixed noise draws
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> holdout_loss;
  long train_samples = 0;
  long holdout_samples = 0;
  size_t train_episodes = 0;
  size_t holdout_episodes = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DiffusionPolicy {
  NoiseSchedule schedule;
  ChunkingConfig chunking;
  DenoiserNet net;
  Normalizer obs_normalizer;
  Normalizer action_normalizer;  // per action dimension
  SamplerOptions sampler{.clip_x0 = 1.0};

  // T_p actions in action units.
  std::vector<Action> sample(const Observation& obs, Rng& rng) const;
};

struct TrainResult {
  DiffusionPolicy policy;
  TrainLog log;
};

// Throws std::invalid_argument on an empty dataset or inconsistent
// dimensions, DivergenceError when the loss leaves 1e3 or goes non-finite.
TrainResult train(const std::vector<PolicyEpisode>& episodes, const TrainConfig& config);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointVersion = "scenegen-checkpoint/1";

void save_checkpoint(const DiffusionPolicy& policy, const std::filesystem::path& path);
DiffusionPolicy load_checkpoint(const std::filesystem::path& path);

// Closed-loop controller interface used by rollouts. A plan is a chunk of
// actions; the rollout executes up to T_a of them before replanning.
class ChunkPolicy {
 public:
  virtual ~ChunkPolicy() = default;
  virtual void reset(const World& world, const WorldState& state, uint64_t seed) {
    (void)world, (void)state, (void)seed;
  }
  virtual std::vector<Action> plan(const Observation& obs, const WorldState& state,
                                   Rng& rng) = 0;
};

class DiffusionChunkPolicy : public ChunkPolicy {
 public:
  explicit DiffusionChunkPolicy(const DiffusionPolicy& policy) : policy_(&policy) {}
  std::vector<Action> plan(const Observation& obs, const WorldState& state, Rng& rng) override;

 private:
  const DiffusionPolicy* policy_;
};

// Noise-free scripted expert with privileged state access; one action per
// plan.
class ExpertPolicy : public ChunkPolicy {
 public:
  void reset(const World& world, const WorldState& state, uint64_t seed) override;
  std::vector<Action> plan(const Observation& obs, const WorldState& state, Rng& rng) override;

 private:
  std::unique_ptr<ScriptedExpert> expert_;
};

struct RolloutResult {
  bool success = false;
  int steps = 0;
  int replans = 0;
  std::vector<WorldState> states;
  std::vector<Action> actions;
};

// observe -> plan -> execute up to T_a actions, until success or max_steps.
RolloutResult rollout(ChunkPolicy& policy, const World& world, const SceneConfig& scene,
                      const CameraRig& rig, const ChunkingConfig& chunking, int max_steps,
                      Rng& rng);

}  // namespace scenegen

#endif  // SCENEGEN_POLICY_HPP_
