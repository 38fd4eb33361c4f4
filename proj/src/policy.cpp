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

#include "scenegen/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "scenegen/tolerances.hpp"

namespace scenegen {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

MatrixXd silu(const MatrixXd& z) {
  return (z.array() / (1.0 + (-z.array()).exp())).matrix();
}

MatrixXd silu_derivative(const MatrixXd& z) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

MatrixXd normal_matrix(long rows, long cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (long j = 0; j < cols; ++j) {
    for (long i = 0; i < rows; ++i) m(i, j) = standard_normal(rng);
  }
  return m;
}

std::string describe(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- schedule

NoiseSchedule NoiseSchedule::FromBetas(std::vector<double> betas) {
  if (betas.empty()) throw std::invalid_argument("noise schedule needs at least one step");
  for (size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) {
      throw std::invalid_argument("beta_" + std::to_string(i + 1) + " outside (0, 1)");
    }
    if (i > 0 && betas[i] < betas[i - 1]) {
      throw std::invalid_argument("betas must be non-decreasing");
    }
  }
  NoiseSchedule s;
  s.betas_ = std::move(betas);
  const size_t n = s.betas_.size();
  s.alpha_bars_.resize(n);
  s.sigmas_.resize(n);
  double bar = 1.0;
  for (size_t i = 0; i < n; ++i) {
    const double prev = bar;
    bar *= 1.0 - s.betas_[i];
    s.alpha_bars_[i] = bar;
    s.sigmas_[i] = std::sqrt((1.0 - prev) / (1.0 - bar) * s.betas_[i]);
  }
  return s;
}

NoiseSchedule NoiseSchedule::Linear(int steps, double beta_first, double beta_last) {
  if (steps < 1) throw std::invalid_argument("noise schedule needs at least one step");
  std::vector<double> betas(steps);
  for (int i = 0; i < steps; ++i) {
    const double u = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[i] = beta_first + u * (beta_last - beta_first);
  }
  return FromBetas(std::move(betas));
}

NoiseSchedule NoiseSchedule::Default(int steps) {
  if (steps < 1) throw std::invalid_argument("noise schedule needs at least one step");
  const double scale = 1000.0 / steps;
  return Linear(steps, std::min(1e-4 * scale, 0.5), std::min(0.02 * scale, 0.5));
}

double NoiseSchedule::beta(int k) const {
  if (k < 1 || k > steps()) throw std::out_of_range("diffusion step out of range");
  return betas_[k - 1];
}

double NoiseSchedule::alpha(int k) const { return 1.0 - beta(k); }

double NoiseSchedule::alpha_bar(int k) const {
  if (k == 0) return 1.0;
  if (k < 0 || k > steps()) throw std::out_of_range("diffusion step out of range");
  return alpha_bars_[k - 1];
}

double NoiseSchedule::sigma(int k) const {
  if (k < 1 || k > steps()) throw std::out_of_range("diffusion step out of range");
  return sigmas_[k - 1];
}

void ChunkingConfig::validate() const {
  if (execution_horizon < 1 || execution_horizon > prediction_horizon) {
    throw std::invalid_argument("chunking requires 1 <= T_a <= T_p");
  }
}

NoisedChunk forward_noise(const VectorXd& x0, int k, const NoiseSchedule& schedule, Rng& rng) {
  if (k < 0 || k > schedule.steps()) throw std::out_of_range("diffusion step out of range");
  VectorXd eps(x0.size());
  for (long i = 0; i < eps.size(); ++i) eps[i] = standard_normal(rng);
  VectorXd xk = forward_noise(x0, k, schedule, eps);
  return {std::move(xk), std::move(eps)};
}

VectorXd forward_noise(const VectorXd& x0, int k, const NoiseSchedule& schedule,
                       const VectorXd& epsilon) {
  if (k < 0 || k > schedule.steps()) throw std::out_of_range("diffusion step out of range");
  if (epsilon.size() != x0.size()) throw std::invalid_argument("noise shape mismatch");
  const double bar = schedule.alpha_bar(k);
  return std::sqrt(bar) * x0 + std::sqrt(1.0 - bar) * epsilon;
}

VectorXd timestep_embedding(int k, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("embedding dim must be even");
  const int half = dim / 2;
  VectorXd e(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(k * freq);
    e[half + i] = std::cos(k * freq);
  }
  return e;
}

// ---------------------------------------------------------------- network

std::vector<std::pair<int, int>> NetShape::layer_shapes() const {
  std::vector<std::pair<int, int>> shapes;
  int in = input_dim();
  for (int l = 0; l < hidden_layers; ++l) {
    shapes.emplace_back(hidden, in);
    in = hidden;
  }
  shapes.emplace_back(chunk_dim, in);
  return shapes;
}

size_t NetShape::num_parameters() const {
  size_t n = 0;
  for (const auto& [rows, cols] : layer_shapes()) n += static_cast<size_t>(rows) * (cols + 1);
  return n;
}

Parameterization parse_parameterization(std::string_view name) {
  if (name == "epsilon") return Parameterization::epsilon;
  if (name == "sample") return Parameterization::sample;
  throw std::invalid_argument("unknown parameterization '" + std::string(name) + "'");
}

std::string parameterization_name(Parameterization p) {
  return p == Parameterization::epsilon ? "epsilon" : "sample";
}

DenoiserNet::DenoiserNet(NetShape shape, uint64_t seed, const NoiseSchedule* schedule)
    : shape_(shape) {
  if (shape.chunk_dim < 1 || shape.obs_dim < 0 || shape.hidden < 1 || shape.hidden_layers < 1) {
    throw std::invalid_argument("invalid network shape");
  }
  if (shape.parameterization == Parameterization::sample) {
    if (schedule == nullptr) throw std::invalid_argument("sample parameterization needs a schedule");
    for (int k = 1; k <= schedule->steps(); ++k) alpha_bars_.push_back(schedule->alpha_bar(k));
  }
  timestep_embedding(1, shape.embed_dim);  // validates the embedding size
  params_.resize(static_cast<long>(shape.num_parameters()));
  Rng rng = make_rng(seed);
  long offset = 0;
  for (const auto& [rows, cols] : shape.layer_shapes()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (long i = 0; i < static_cast<long>(rows) * (cols + 1); ++i) params_[offset + i] = u(rng);
    offset += static_cast<long>(rows) * (cols + 1);
  }
}

MatrixXd DenoiserNet::assemble_input(const MatrixXd& x_k, const MatrixXd& obs,
                                     const std::vector<int>& ks) const {
  const long n = x_k.cols();
  if (x_k.rows() != shape_.chunk_dim || obs.rows() != shape_.obs_dim || obs.cols() != n ||
      static_cast<long>(ks.size()) != n) {
    throw std::invalid_argument("denoiser input shape mismatch");
  }
  MatrixXd in(shape_.input_dim(), n);
  in.topRows(shape_.chunk_dim) = x_k;
  in.middleRows(shape_.chunk_dim, shape_.obs_dim) = obs;
  for (long j = 0; j < n; ++j) {
    in.col(j).tail(shape_.embed_dim) = timestep_embedding(ks[j], shape_.embed_dim);
  }
  return in;
}

std::pair<VectorXd, VectorXd> DenoiserNet::output_map(const std::vector<int>& ks) const {
  const long n = static_cast<long>(ks.size());
  VectorXd a = VectorXd::Zero(n), b = VectorXd::Ones(n);
  if (shape_.parameterization == Parameterization::sample) {
    for (long j = 0; j < n; ++j) {
      if (ks[j] < 1 || ks[j] > static_cast<int>(alpha_bars_.size())) {
        throw std::out_of_range("diffusion step out of range");
      }
      const double bar = alpha_bars_[ks[j] - 1];
      a[j] = 1.0 / std::sqrt(1.0 - bar);
      b[j] = -std::sqrt(bar) * a[j];
    }
  }
  return {a, b};
}

MatrixXd DenoiserNet::predict(const MatrixXd& x_k, const MatrixXd& obs,
                              const std::vector<int>& ks) const {
  MatrixXd a = assemble_input(x_k, obs, ks);
  const auto shapes = shape_.layer_shapes();
  long offset = 0;
  for (size_t l = 0; l < shapes.size(); ++l) {
    const auto [rows, cols] = shapes[l];
    Eigen::Map<const MatrixXd> w(params_.data() + offset, rows, cols);
    Eigen::Map<const VectorXd> b(params_.data() + offset + static_cast<long>(rows) * cols, rows);
    offset += static_cast<long>(rows) * (cols + 1);
    MatrixXd z = w * a;
    z.colwise() += b;
    a = l + 1 < shapes.size() ? silu(z) : std::move(z);
  }
  if (shape_.parameterization == Parameterization::epsilon) return a;
  const auto [ax, bf] = output_map(ks);
  return x_k * ax.asDiagonal() + a * bf.asDiagonal();
}

double DenoiserNet::loss(const MatrixXd& x_k, const MatrixXd& obs, const std::vector<int>& ks,
                         const MatrixXd& epsilon, VectorXd* gradient) const {
  const auto shapes = shape_.layer_shapes();
  const size_t layers = shapes.size();
  std::vector<long> offsets(layers);
  std::vector<MatrixXd> z(layers);
  std::vector<MatrixXd> a(layers + 1);
  a[0] = assemble_input(x_k, obs, ks);
  long offset = 0;
  for (size_t l = 0; l < layers; ++l) {
    const auto [rows, cols] = shapes[l];
    offsets[l] = offset;
    Eigen::Map<const MatrixXd> w(params_.data() + offset, rows, cols);
    Eigen::Map<const VectorXd> b(params_.data() + offset + static_cast<long>(rows) * cols, rows);
    offset += static_cast<long>(rows) * (cols + 1);
    z[l].noalias() = w * a[l];
    z[l].colwise() += b;
    a[l + 1] = l + 1 < layers ? silu(z[l]) : z[l];
  }
  if (epsilon.rows() != a[layers].rows() || epsilon.cols() != a[layers].cols()) {
    throw std::invalid_argument("noise target shape mismatch");
  }
  // the sample parameterization regresses the clean chunk directly, which
  // weights every diffusion step equally
  MatrixXd target = epsilon;
  if (shape_.parameterization == Parameterization::sample) {
    for (long j = 0; j < target.cols(); ++j) {
      if (ks[j] < 1 || ks[j] > static_cast<int>(alpha_bars_.size())) {
        throw std::out_of_range("diffusion step out of range");
      }
      const double bar = alpha_bars_[ks[j] - 1];
      target.col(j) = (x_k.col(j) - std::sqrt(1.0 - bar) * epsilon.col(j)) / std::sqrt(bar);
    }
  }
  const MatrixXd& prediction = a[layers];
  const double value = noise_mse(prediction, target);
  if (gradient == nullptr) return value;

  gradient->resize(params_.size());
  MatrixXd delta = (2.0 / static_cast<double>(target.size())) * (prediction - target);
  for (size_t l = layers; l-- > 0;) {
    const auto [rows, cols] = shapes[l];
    Eigen::Map<MatrixXd> gw(gradient->data() + offsets[l], rows, cols);
    Eigen::Map<VectorXd> gb(gradient->data() + offsets[l] + static_cast<long>(rows) * cols, rows);
    gw.noalias() = delta * a[l].transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const MatrixXd> w(params_.data() + offsets[l], rows, cols);
      MatrixXd back = w.transpose() * delta;
      delta = back.cwiseProduct(silu_derivative(z[l - 1]));
    }
  }
  return value;
}

double noise_mse(const MatrixXd& prediction, const MatrixXd& epsilon) {
  if (prediction.rows() != epsilon.rows() || prediction.cols() != epsilon.cols()) {
    throw std::invalid_argument("noise target shape mismatch");
  }
  if (prediction.size() == 0) throw std::invalid_argument("empty batch");
  double total = 0.0;
  for (long j = 0; j < prediction.cols(); ++j) {
    const double s = (prediction.col(j) - epsilon.col(j)).squaredNorm();
    if (!std::isfinite(s)) {
      throw NonFiniteLossError("non-finite loss at sample " + std::to_string(j), j);
    }
    total += s;
  }
  return total / static_cast<double>(prediction.size());
}

LossResult bc_loss(const DenoiserNet& net, const TrainingBatch& batch,
                   const NoiseSchedule& schedule, Rng& rng) {
  const long n = batch.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  std::uniform_int_distribution<int> step(1, schedule.steps());
  std::vector<int> ks(n);
  for (auto& k : ks) k = step(rng);
  const MatrixXd eps = normal_matrix(batch.chunks.rows(), n, rng);
  return bc_loss(net, batch, ks, eps, schedule);
}

LossResult bc_loss(const DenoiserNet& net, const TrainingBatch& batch, const std::vector<int>& ks,
                   const MatrixXd& epsilon, const NoiseSchedule& schedule) {
  const long n = batch.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  if (static_cast<long>(ks.size()) != n || epsilon.cols() != n ||
      epsilon.rows() != batch.chunks.rows() || batch.obs.cols() != n) {
    throw std::invalid_argument("batch shape mismatch");
  }
  MatrixXd xk(batch.chunks.rows(), n);
  for (long j = 0; j < n; ++j) {
    if (ks[j] < 1 || ks[j] > schedule.steps()) {
      throw std::out_of_range("diffusion step out of range");
    }
    const double bar = schedule.alpha_bar(ks[j]);
    xk.col(j) = std::sqrt(bar) * batch.chunks.col(j) + std::sqrt(1.0 - bar) * epsilon.col(j);
  }
  LossResult r;
  r.loss = net.loss(xk, batch.obs, ks, epsilon, &r.gradient);
  return r;
}

VectorXd sample_chunk(const DenoiserNet& net, const VectorXd& obs, const NoiseSchedule& schedule,
                      Rng& rng, const SamplerOptions& options) {
  VectorXd x(net.shape().chunk_dim);
  for (long i = 0; i < x.size(); ++i) x[i] = standard_normal(rng);
  return sample_chunk(net, obs, schedule, rng, std::move(x), options);
}

VectorXd sample_chunk(const DenoiserNet& net, const VectorXd& obs, const NoiseSchedule& schedule,
                      Rng& rng, VectorXd x, const SamplerOptions& options) {
  if (x.size() != net.shape().chunk_dim) throw std::invalid_argument("x_K shape mismatch");
  for (int k = schedule.steps(); k >= 1; --k) {
    const VectorXd eps = net.predict(x, obs, {k});
    const double bar = schedule.alpha_bar(k);
    if (options.clip_x0 > 0.0) {
      const VectorXd x0 = ((x - std::sqrt(1.0 - bar) * eps) / std::sqrt(bar))
                              .cwiseMax(-options.clip_x0)
                              .cwiseMin(options.clip_x0);
      const double prev = schedule.alpha_bar(k - 1);
      x = (std::sqrt(prev) * schedule.beta(k) / (1.0 - bar)) * x0 +
          (std::sqrt(schedule.alpha(k)) * (1.0 - prev) / (1.0 - bar)) * x;
    } else {
      const double coef = schedule.beta(k) / std::sqrt(1.0 - bar);
      x = (x - coef * eps) / std::sqrt(schedule.alpha(k));
    }
    if (k > 1) {
      const double sigma = schedule.sigma(k);
      for (long i = 0; i < x.size(); ++i) x[i] += sigma * standard_normal(rng);
    }
  }
  return x;
}

// ---------------------------------------------------------------- data

Normalizer::Normalizer(VectorXd center, VectorXd half_range)
    : center_(std::move(center)), half_range_(std::move(half_range)) {
  if (center_.size() != half_range_.size()) throw std::invalid_argument("normalizer size mismatch");
  if ((half_range_.array() < 0.0).any() || !half_range_.allFinite() || !center_.allFinite()) {
    throw std::invalid_argument("invalid normalizer range");
  }
  scale_ = (half_range_.array() == 0.0).select(1.0, half_range_);
}

Normalizer Normalizer::Fit(const MatrixXd& data) {
  if (data.cols() == 0) throw std::invalid_argument("cannot fit a normalizer to no data");
  const VectorXd lo = data.rowwise().minCoeff();
  const VectorXd hi = data.rowwise().maxCoeff();
  VectorXd half = (hi - lo) / 2.0;
  for (long i = 0; i < half.size(); ++i) {
    if (!(half[i] > kConstantSpread)) half[i] = 0.0;
  }
  return Normalizer((lo + hi) / 2.0, half);
}

MatrixXd Normalizer::normalize(const MatrixXd& x) const {
  if (x.rows() != dim()) throw std::invalid_argument("normalizer dimension mismatch");
  return ((x.colwise() - center_).array().colwise() / scale_.array()).matrix();
}

MatrixXd Normalizer::denormalize(const MatrixXd& x) const {
  if (x.rows() != dim()) throw std::invalid_argument("normalizer dimension mismatch");
  return ((x.array().colwise() * half_range_.array()).matrix().colwise() + center_);
}

VectorXd Normalizer::normalize_chunk(const VectorXd& chunk) const {
  if (dim() == 0 || chunk.size() % dim() != 0) throw std::invalid_argument("chunk size mismatch");
  Eigen::Map<const MatrixXd> m(chunk.data(), dim(), chunk.size() / dim());
  const MatrixXd n = normalize(m);
  return Eigen::Map<const VectorXd>(n.data(), n.size());
}

VectorXd Normalizer::denormalize_chunk(const VectorXd& chunk) const {
  if (dim() == 0 || chunk.size() % dim() != 0) throw std::invalid_argument("chunk size mismatch");
  Eigen::Map<const MatrixXd> m(chunk.data(), dim(), chunk.size() / dim());
  const MatrixXd d = denormalize(m);
  return Eigen::Map<const VectorXd>(d.data(), d.size());
}

VectorXd action_chunk(const PolicyEpisode& episode, int t, int horizon) {
  const long length = episode.actions.cols();
  if (length == 0 || t < 0 || t >= length) throw std::out_of_range("chunk start out of range");
  VectorXd chunk(static_cast<long>(horizon) * Action::kDim);
  for (int i = 0; i < horizon; ++i) {
    auto block = chunk.segment(static_cast<long>(i) * Action::kDim, Action::kDim);
    if (t + i < length) {
      block = episode.actions.col(t + i);
    } else {
      block.setZero();
      block[Action::kDim - 1] = episode.actions(Action::kDim - 1, length - 1);
    }
  }
  return chunk;
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string optimizer_name(Optimizer optimizer) {
  return optimizer == Optimizer::sgd ? "sgd" : "adam";
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must be in [0, 1)");
  }
  if (diffusion_steps < 1) throw std::invalid_argument("diffusion steps must be >= 1");
  chunking.validate();
}

// ---------------------------------------------------------------- training

namespace {

struct SampleSet {
  MatrixXd obs;
  MatrixXd chunks;
};

SampleSet collect(const std::vector<PolicyEpisode>& episodes, const std::vector<size_t>& which,
                  int horizon) {
  long n = 0;
  for (size_t e : which) n += episodes[e].actions.cols();
  SampleSet s;
  s.obs.resize(episodes.front().observations.rows(), n);
  s.chunks.resize(static_cast<long>(horizon) * Action::kDim, n);
  long col = 0;
  for (size_t e : which) {
    const auto& ep = episodes[e];
    for (long t = 0; t < ep.actions.cols(); ++t, ++col) {
      s.obs.col(col) = ep.observations.col(t);
      s.chunks.col(col) = action_chunk(ep, static_cast<int>(t), horizon);
    }
  }
  return s;
}

// Mean loss with noise and steps drawn from a fixed seed, in blocks.
double evaluate_loss(const DenoiserNet& net, const TrainingBatch& data,
                     const NoiseSchedule& schedule, uint64_t seed) {
  Rng rng = make_rng(seed);
  constexpr long kBlock = 1024;
  double total = 0.0;
  for (long start = 0; start < data.size(); start += kBlock) {
    const long n = std::min(kBlock, data.size() - start);
    TrainingBatch block{data.obs.middleCols(start, n), data.chunks.middleCols(start, n)};
    std::uniform_int_distribution<int> step(1, schedule.steps());
    std::vector<int> ks(n);
    for (auto& k : ks) k = step(rng);
    const MatrixXd eps = normal_matrix(block.chunks.rows(), n, rng);
    MatrixXd xk(block.chunks.rows(), n);
    for (long j = 0; j < n; ++j) {
      xk.col(j) = forward_noise(VectorXd(block.chunks.col(j)), ks[j], schedule,
                                VectorXd(eps.col(j)));
    }
    total += net.loss(xk, block.obs, ks, eps, nullptr) * static_cast<double>(n);
  }
  return total / static_cast<double>(data.size());
}

void check_episodes(const std::vector<PolicyEpisode>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  const long obs_dim = episodes.front().observations.rows();
  for (size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    if (e.observations.rows() != obs_dim || e.actions.rows() != Action::kDim ||
        e.observations.cols() != e.actions.cols() || e.actions.cols() == 0) {
      throw std::invalid_argument("episode " + std::to_string(i) +
                                  " does not match the training schema");
    }
  }
}

}  // namespace

TrainResult train(const std::vector<PolicyEpisode>& episodes, const TrainConfig& config) {
  config.validate();
  check_episodes(episodes);

  std::vector<size_t> order(episodes.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = make_rng(mix_seed(config.seed ^ 0x5b1f));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto holdout_count = static_cast<size_t>(
      std::floor(config.holdout_fraction * static_cast<double>(episodes.size())));
  std::vector<size_t> holdout_ids(order.begin(), order.begin() + holdout_count);
  std::vector<size_t> train_ids(order.begin() + holdout_count, order.end());
  std::sort(holdout_ids.begin(), holdout_ids.end());
  std::sort(train_ids.begin(), train_ids.end());

  const int horizon = config.chunking.prediction_horizon;
  const SampleSet train_raw = collect(episodes, train_ids, horizon);
  MatrixXd train_actions(Action::kDim, 0);
  {
    long n = 0;
    for (size_t e : train_ids) n += episodes[e].actions.cols();
    train_actions.resize(Action::kDim, n);
    long col = 0;
    for (size_t e : train_ids) {
      train_actions.middleCols(col, episodes[e].actions.cols()) = episodes[e].actions;
      col += episodes[e].actions.cols();
    }
  }

  TrainResult result;
  DiffusionPolicy& policy = result.policy;
  policy.schedule = NoiseSchedule::Default(config.diffusion_steps);
  policy.chunking = config.chunking;
  policy.obs_normalizer = Normalizer::Fit(train_raw.obs);
  policy.action_normalizer = Normalizer::Fit(train_actions);
  NetShape shape;
  shape.chunk_dim = horizon * Action::kDim;
  shape.obs_dim = static_cast<int>(train_raw.obs.rows());
  shape.embed_dim = config.embed_dim;
  shape.hidden = config.hidden;
  shape.parameterization = config.parameterization;
  policy.net = DenoiserNet(shape, mix_seed(config.seed ^ 0x1e7), &policy.schedule);

  const auto normalize_set = [&](const SampleSet& raw) {
    TrainingBatch b;
    b.obs = policy.obs_normalizer.normalize(raw.obs);
    b.chunks.resize(raw.chunks.rows(), raw.chunks.cols());
    for (long j = 0; j < raw.chunks.cols(); ++j) {
      b.chunks.col(j) = policy.action_normalizer.normalize_chunk(raw.chunks.col(j));
    }
    return b;
  };
  const TrainingBatch train_set = normalize_set(train_raw);
  TrainingBatch holdout_set;
  if (!holdout_ids.empty()) holdout_set = normalize_set(collect(episodes, holdout_ids, horizon));

  TrainLog& log = result.log;
  log.train_samples = train_set.size();
  log.holdout_samples = holdout_set.size();
  log.train_episodes = train_ids.size();
  log.holdout_episodes = holdout_ids.size();
  const uint64_t eval_seed = mix_seed(config.seed ^ 0xe7a1);
  log.initial_loss = evaluate_loss(policy.net, train_set, policy.schedule, eval_seed);

  Rng rng = make_rng(mix_seed(config.seed ^ 0x7a1));
  VectorXd& theta = policy.net.parameters();
  VectorXd m = VectorXd::Zero(theta.size());
  VectorXd v = VectorXd::Zero(theta.size());
  long updates = 0;
  std::vector<long> perm(train_set.size());
  std::iota(perm.begin(), perm.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double sum = 0.0;
    long batches = 0;
    for (long start = 0; start < train_set.size(); start += config.batch_size) {
      const long n = std::min<long>(config.batch_size, train_set.size() - start);
      const std::vector<long> idx(perm.begin() + start, perm.begin() + start + n);
      const TrainingBatch batch{train_set.obs(Eigen::all, idx), train_set.chunks(Eigen::all, idx)};
      LossResult r;
      try {
        r = bc_loss(policy.net, batch, policy.schedule, rng);
      } catch (const NonFiniteLossError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batches) + ": non-finite loss for sample " +
                              std::to_string(idx[e.sample()]));
      }
      if (!(r.loss <= tol::kDivergenceLoss)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batches) + ": loss " +
                              describe(r.loss));
      }
      ++updates;
      if (config.optimizer == Optimizer::sgd) {
        theta -= config.learning_rate * r.gradient;
      } else {
        constexpr double b1 = 0.9, b2 = 0.999, tiny = 1e-8;
        m = b1 * m + (1.0 - b1) * r.gradient;
        v = b2 * v + (1.0 - b2) * r.gradient.cwiseAbs2();
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(updates));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(updates));
        theta.array() -= config.learning_rate * (m.array() / c1) /
                         ((v.array() / c2).sqrt() + tiny);
      }
      sum += r.loss;
      ++batches;
    }
    log.epoch_loss.push_back(sum / static_cast<double>(std::max<long>(batches, 1)));
    double held = std::numeric_limits<double>::quiet_NaN();
    if (holdout_set.size() > 0) {
      held = evaluate_loss(policy.net, holdout_set, policy.schedule, eval_seed ^ 0x40);
      log.holdout_loss.push_back(held);
    }
    if (config.on_epoch) config.on_epoch(epoch, log.epoch_loss.back(), held);
  }
  log.final_loss = evaluate_loss(policy.net, train_set, policy.schedule, eval_seed);
  return result;
}

std::vector<Action> DiffusionPolicy::sample(const Observation& obs, Rng& rng) const {
  const VectorXd s = obs_normalizer.normalize(obs);
  const VectorXd chunk = action_normalizer.denormalize_chunk(sample_chunk(net, s, schedule, rng, sampler));
  std::vector<Action> actions;
  actions.reserve(chunk.size() / Action::kDim);
  for (long i = 0; i < chunk.size(); i += Action::kDim) {
    actions.push_back(Action::FromVector(chunk.segment(i, Action::kDim)));
  }
  return actions;
}

// ---------------------------------------------------------------- checkpoint

namespace {

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size()));
}

}  // namespace

void save_checkpoint(const DiffusionPolicy& policy, const std::filesystem::path& path) {
  const NetShape& s = policy.net.shape();
  json header = {
      {"betas", policy.schedule.betas()},
      {"chunking",
       {{"prediction_horizon", policy.chunking.prediction_horizon},
        {"execution_horizon", policy.chunking.execution_horizon}}},
      {"net",
       {{"parameterization", parameterization_name(s.parameterization)},
        {"chunk_dim", s.chunk_dim},
        {"obs_dim", s.obs_dim},
        {"embed_dim", s.embed_dim},
        {"hidden", s.hidden},
        {"hidden_layers", s.hidden_layers},
        {"activation", "silu"}}},
      {"layer_shapes", s.layer_shapes()},
      {"obs_normalizer",
       {{"center", vec_json(policy.obs_normalizer.center())},
        {"half_range", vec_json(policy.obs_normalizer.half_range())}}},
      {"action_normalizer",
       {{"center", vec_json(policy.action_normalizer.center())},
        {"half_range", vec_json(policy.action_normalizer.half_range())}}},
      {"clip_x0", policy.sampler.clip_x0},
      {"num_parameters", policy.net.parameters().size()},
  };
  std::string out = std::string(kCheckpointVersion) + "\n";
  const std::string text = header.dump();
  io::put_u64(out, text.size());
  out += text;
  const VectorXd& p = policy.net.parameters();
  io::put_u64(out, static_cast<uint64_t>(p.size()));
  for (long i = 0; i < p.size(); ++i) io::put_f64(out, p[i]);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("failed writing checkpoint " + path.string());
}

DiffusionPolicy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const size_t eol = data.find('\n');
  const std::string tag = data.substr(0, eol);
  if (eol == std::string::npos || tag.rfind("scenegen-checkpoint/", 0) != 0) {
    throw CheckpointError(path.string() + " is not a scenegen checkpoint");
  }
  if (tag != kCheckpointVersion) {
    throw CheckpointError("checkpoint version '" + tag + "' is not supported (expected '" +
                          kCheckpointVersion + "')");
  }
  try {
    io::Reader r(std::string_view(data).substr(eol + 1));
    const uint64_t header_size = r.u64();
    const json h = json::parse(r.bytes(header_size));
    DiffusionPolicy p;
    p.schedule = NoiseSchedule::FromBetas(h.at("betas").get<std::vector<double>>());
    p.chunking.prediction_horizon = h.at("chunking").at("prediction_horizon");
    p.chunking.execution_horizon = h.at("chunking").at("execution_horizon");
    p.chunking.validate();
    NetShape s;
    const json& n = h.at("net");
    s.chunk_dim = n.at("chunk_dim");
    s.obs_dim = n.at("obs_dim");
    s.embed_dim = n.at("embed_dim");
    s.hidden = n.at("hidden");
    s.hidden_layers = n.at("hidden_layers");
    s.parameterization = parse_parameterization(n.value("parameterization", "epsilon"));
    p.net = DenoiserNet(s, 0, &p.schedule);
    p.obs_normalizer = Normalizer(json_vec(h.at("obs_normalizer").at("center")),
                                  json_vec(h.at("obs_normalizer").at("half_range")));
    p.action_normalizer = Normalizer(json_vec(h.at("action_normalizer").at("center")),
                                     json_vec(h.at("action_normalizer").at("half_range")));
    p.sampler.clip_x0 = h.at("clip_x0");
    const uint64_t count = r.u64();
    if (count != s.num_parameters()) throw CheckpointError("parameter count mismatch");
    for (uint64_t i = 0; i < count; ++i) p.net.parameters()[static_cast<long>(i)] = r.f64();
    if (r.remaining() != 0) throw CheckpointError("trailing bytes after parameters");
    if (p.obs_normalizer.dim() != s.obs_dim || p.action_normalizer.dim() != Action::kDim ||
        s.chunk_dim != p.chunking.prediction_horizon * Action::kDim) {
      throw CheckpointError("inconsistent checkpoint header");
    }
    return p;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- rollout

std::vector<Action> DiffusionChunkPolicy::plan(const Observation& obs, const WorldState&,
                                               Rng& rng) {
  return policy_->sample(obs, rng);
}

void ExpertPolicy::reset(const World& world, const WorldState&, uint64_t seed) {
  expert_ = std::make_unique<ScriptedExpert>(world, ExpertNoise::None(), seed);
}

std::vector<Action> ExpertPolicy::plan(const Observation&, const WorldState& state, Rng&) {
  if (!expert_) throw std::logic_error("expert policy used before reset");
  return {expert_->act(state)};
}

RolloutResult rollout(ChunkPolicy& policy, const World& world, const SceneConfig& scene,
                      const CameraRig& rig, const ChunkingConfig& chunking, int max_steps,
                      Rng& rng) {
  chunking.validate();
  RolloutResult result;
  WorldState state = world.reset(scene, rng);
  policy.reset(world, state, rng());
  result.states.push_back(state);
  result.success = world.check_success(state);
  while (!result.success && result.steps < max_steps) {
    const std::vector<Action> chunk = policy.plan(world.observe(state, scene, rig), state, rng);
    ++result.replans;
    if (chunk.empty()) break;
    const size_t execute = std::min<size_t>(chunk.size(), chunking.execution_horizon);
    for (size_t i = 0; i < execute && result.steps < max_steps; ++i) {
      state = world.step(state, chunk[i]);
      result.actions.push_back(chunk[i]);
      result.states.push_back(state);
      ++result.steps;
      if (world.check_success(state)) {
        result.success = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace scenegen
