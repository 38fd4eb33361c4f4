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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "scenegen/tolerances.hpp"

namespace scenegen {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd random_matrix(long rows, long cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), tol::kGradFloor});
}

TEST_CASE("schedule invariants") {
  const NoiseSchedule s = NoiseSchedule::Default(50);
  CHECK(s.steps() == 50);
  for (int k = 1; k <= 50; ++k) {
    CHECK(s.beta(k) > 0.0);
    CHECK(s.beta(k) < 1.0);
    if (k > 1) CHECK(s.beta(k) >= s.beta(k - 1));
    CHECK(s.alpha_bar(k) < s.alpha_bar(k - 1));
  }
  CHECK(s.sigma(1) == 0.0);
  CHECK(s.alpha_bar(50) < 1e-3);
  // unscaled linear schedule as a reference point
  const NoiseSchedule raw = NoiseSchedule::Linear(1000, 1e-4, 0.02);
  CHECK(raw.beta(1) == doctest::Approx(1e-4));
  CHECK(raw.beta(1000) == doctest::Approx(0.02));
  CHECK_THROWS_AS(NoiseSchedule::FromBetas({0.1, 0.05}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::FromBetas({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::FromBetas({1.0}), std::invalid_argument);
}

TEST_CASE("posterior sigma matches the closed form") {
  const NoiseSchedule s = NoiseSchedule::Linear(4, 0.1, 0.4);
  // alpha_bar: 0.9, 0.9*0.8, 0.9*0.8*0.7, ...
  const double b1 = 0.9, b2 = 0.72, b3 = 0.504;
  CHECK(s.alpha_bar(2) == doctest::Approx(b2).epsilon(1e-12));
  CHECK(s.sigma(2) == doctest::Approx(std::sqrt((1 - b1) / (1 - b2) * 0.2)).epsilon(1e-12));
  CHECK(s.sigma(3) == doctest::Approx(std::sqrt((1 - b2) / (1 - b3) * 0.3)).epsilon(1e-12));
}

TEST_CASE("chunking config bounds") {
  CHECK_NOTHROW(ChunkingConfig{16, 8}.validate());
  CHECK_NOTHROW(ChunkingConfig{1, 1}.validate());
  CHECK_THROWS_AS(ChunkingConfig({4, 5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ChunkingConfig({4, 0}).validate(), std::invalid_argument);
}

TEST_CASE("forward noise special cases") {
  const NoiseSchedule s = NoiseSchedule::Default(50);
  Rng rng = make_rng(1);
  const VectorXd x0 = VectorXd::LinSpaced(6, -1.0, 1.0);
  CHECK(forward_noise(x0, 0, s, rng).x_k == x0);
  const VectorXd xk = forward_noise(x0, 10, s, VectorXd::Zero(6));
  CHECK((xk - std::sqrt(s.alpha_bar(10)) * x0).norm() < 1e-15);
  CHECK_THROWS_AS(forward_noise(x0, 51, s, rng), std::out_of_range);
  CHECK_THROWS_AS(forward_noise(x0, -1, s, rng), std::out_of_range);
}

TEST_CASE("forward noise marginal statistics") {
  const NoiseSchedule s = NoiseSchedule::Default(50);
  Rng rng = make_rng(2);
  const int k = 12;
  VectorXd x0(1);
  x0 << 0.7;
  double sum = 0.0, sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double v = forward_noise(x0, k, s, rng).x_k[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean - std::sqrt(s.alpha_bar(k)) * 0.7) < 0.02);
  CHECK(std::abs(var - (1.0 - s.alpha_bar(k))) < 0.02);
}

TEST_CASE("timestep embedding layout") {
  const VectorXd e = timestep_embedding(3, 8);
  CHECK(e.size() == 8);
  CHECK(e[0] == doctest::Approx(std::sin(3.0)));
  CHECK(e[4] == doctest::Approx(std::cos(3.0)));
  CHECK(e[1] == doctest::Approx(std::sin(3.0 * std::exp(-std::log(10000.0) / 4))));
  CHECK_THROWS_AS(timestep_embedding(1, 7), std::invalid_argument);
}

TEST_CASE("network shapes") {
  NetShape shape{.chunk_dim = 14, .obs_dim = 5, .embed_dim = 8, .hidden = 16, .hidden_layers = 2};
  const DenoiserNet net(shape, 3);
  CHECK(net.parameters().size() == static_cast<long>((16 * 27 + 16) + (16 * 16 + 16) + (14 * 16 + 14)));
  Rng rng = make_rng(3);
  const MatrixXd out = net.predict(random_matrix(14, 3, rng), random_matrix(5, 3, rng), {1, 2, 3});
  CHECK(out.rows() == 14);
  CHECK(out.cols() == 3);
}

TEST_CASE("noise mse oracles") {
  Rng rng = make_rng(4);
  const MatrixXd eps = random_matrix(7, 4, rng);
  CHECK(noise_mse(eps, eps) == 0.0);
  // zero prediction over a large batch: E|eps|^2 / dim = 1
  const MatrixXd big = random_matrix(32, 4000, rng);
  CHECK(std::abs(noise_mse(MatrixXd::Zero(32, 4000), big) - 1.0) < 0.05);
  MatrixXd bad = eps;
  bad(2, 3) = std::nan("");
  try {
    noise_mse(bad, eps);
    FAIL("expected an exception");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.sample() == 3);
  }
}

TEST_CASE("bc loss of a zero-output net is about one") {
  NetShape shape{.chunk_dim = 8, .obs_dim = 3, .embed_dim = 8, .hidden = 16, .hidden_layers = 2};
  DenoiserNet net(shape, 5);
  // zero the output layer
  const long tail = 8 * 16 + 8;
  net.parameters().tail(tail).setZero();
  Rng rng = make_rng(6);
  const TrainingBatch batch{random_matrix(3, 3000, rng), random_matrix(8, 3000, rng)};
  const LossResult r = bc_loss(net, batch, NoiseSchedule::Default(50), rng);
  CHECK(std::abs(r.loss - 1.0) < 0.05);
}

TEST_CASE("analytic gradient matches central differences") {
  NetShape shape{.chunk_dim = 6, .obs_dim = 4, .embed_dim = 8, .hidden = 32, .hidden_layers = 2};
  DenoiserNet net(shape, 7);
  Rng rng = make_rng(8);
  const NoiseSchedule s = NoiseSchedule::Default(10);
  const TrainingBatch batch{random_matrix(4, 2, rng), random_matrix(6, 2, rng)};
  const std::vector<int> ks = {3, 9};
  const MatrixXd eps = random_matrix(6, 2, rng);
  const LossResult r = bc_loss(net, batch, ks, eps, s);
  double worst = 0.0;
  const double h = tol::kGradStep;
  for (long i = 0; i < net.parameters().size(); ++i) {
    const double saved = net.parameters()[i];
    net.parameters()[i] = saved + h;
    const double up = bc_loss(net, batch, ks, eps, s).loss;
    net.parameters()[i] = saved - h;
    const double down = bc_loss(net, batch, ks, eps, s).loss;
    net.parameters()[i] = saved;
    worst = std::max(worst, relative_error(r.gradient[i], (up - down) / (2 * h)));
  }
  CHECK(worst <= tol::kGradRelative);
}

TEST_CASE("analytic gradient matches central differences for the sample parameterization") {
  const NoiseSchedule s = NoiseSchedule::Default(10);
  NetShape shape{.parameterization = Parameterization::sample,
                 .chunk_dim = 6,
                 .obs_dim = 4,
                 .embed_dim = 8,
                 .hidden = 32,
                 .hidden_layers = 2};
  DenoiserNet net(shape, 17, &s);
  Rng rng = make_rng(18);
  const TrainingBatch batch{random_matrix(4, 3, rng), random_matrix(6, 3, rng)};
  const std::vector<int> ks = {1, 5, 10};
  const MatrixXd eps = random_matrix(6, 3, rng);
  const LossResult r = bc_loss(net, batch, ks, eps, s);
  double worst = 0.0;
  const double h = tol::kGradStep;
  for (long i = 0; i < net.parameters().size(); ++i) {
    const double saved = net.parameters()[i];
    net.parameters()[i] = saved + h;
    const double up = bc_loss(net, batch, ks, eps, s).loss;
    net.parameters()[i] = saved - h;
    const double down = bc_loss(net, batch, ks, eps, s).loss;
    net.parameters()[i] = saved;
    worst = std::max(worst, relative_error(r.gradient[i], (up - down) / (2 * h)));
  }
  CHECK(worst <= tol::kGradRelative);
}

TEST_CASE("sample parameterization maps the body output to the noise") {
  // with F the body output, eps_hat = (x_k - sqrt(abar) F) / sqrt(1 - abar)
  const NoiseSchedule s = NoiseSchedule::Default(10);
  NetShape shape{.parameterization = Parameterization::sample,
                 .chunk_dim = 2,
                 .obs_dim = 1,
                 .embed_dim = 4,
                 .hidden = 4,
                 .hidden_layers = 1};
  DenoiserNet net(shape, 19, &s);
  net.parameters().setZero();
  net.parameters().tail(2).setConstant(0.5);  // output bias: F == 0.5
  MatrixXd x(2, 1);
  x << 0.3, -0.7;
  const MatrixXd e = net.predict(x, MatrixXd::Zero(1, 1), {4});
  const double ab = s.alpha_bar(4);
  for (int i = 0; i < 2; ++i) {
    CHECK(e(i, 0) == doctest::Approx((x(i, 0) - std::sqrt(ab) * 0.5) / std::sqrt(1 - ab)));
  }
}

TEST_CASE("one-step sampler closed form") {
  NetShape shape{.chunk_dim = 3, .obs_dim = 1, .embed_dim = 4, .hidden = 4, .hidden_layers = 1};
  DenoiserNet net(shape, 9);
  net.parameters().setZero();  // eps_theta == 0
  const NoiseSchedule s = NoiseSchedule::FromBetas({0.3});
  Rng rng = make_rng(10);
  VectorXd x1(3);
  x1 << 0.5, -1.0, 2.0;
  const VectorXd out = sample_chunk(net, VectorXd::Zero(1), s, rng, x1);
  // x_0 = x_1 / sqrt(1 - beta_1), no noise at k = 1
  CHECK((out - x1 / std::sqrt(0.7)).norm() < 1e-12);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  NetShape shape{.chunk_dim = 4, .obs_dim = 2, .embed_dim = 4, .hidden = 8, .hidden_layers = 2};
  const DenoiserNet net(shape, 11);
  const NoiseSchedule s = NoiseSchedule::Default(20);
  Rng a = make_rng(12), b = make_rng(12);
  const VectorXd obs = VectorXd::Ones(2);
  CHECK(sample_chunk(net, obs, s, a) == sample_chunk(net, obs, s, b));
}

TEST_CASE("normalizer round trip") {
  Rng rng = make_rng(13);
  MatrixXd data = random_matrix(5, 50, rng) * 3.0;
  data.row(4).setConstant(2.5);  // degenerate dimension
  const Normalizer n = Normalizer::Fit(data);
  const MatrixXd z = n.normalize(data);
  CHECK(z.topRows(4).maxCoeff() == doctest::Approx(1.0));
  CHECK(z.topRows(4).minCoeff() == doctest::Approx(-1.0));
  CHECK(z.row(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK((n.denormalize(z) - data).cwiseAbs().maxCoeff() < 1e-9);
  VectorXd chunk(15);
  chunk << data.col(3), data.col(17), data.col(41);
  CHECK((n.denormalize_chunk(n.normalize_chunk(chunk)) - chunk).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("action chunks pad with zero motion and the last gripper command") {
  PolicyEpisode ep;
  ep.observations = MatrixXd::Zero(2, 3);
  ep.actions = MatrixXd::Constant(7, 3, 0.01);
  ep.actions(6, 2) = 0.0;
  const VectorXd c = action_chunk(ep, 1, 4);
  CHECK(c.size() == 28);
  CHECK(c.segment(0, 7) == ep.actions.col(1));
  CHECK(c.segment(7, 7) == ep.actions.col(2));
  CHECK(c.segment(14, 6).isZero());
  CHECK(c[20] == 0.0);
  CHECK_THROWS_AS(action_chunk(ep, 3, 4), std::out_of_range);
}

std::vector<PolicyEpisode> delta_dataset() {
  // one fixed action regardless of observation
  std::vector<PolicyEpisode> eps;
  for (int e = 0; e < 4; ++e) {
    PolicyEpisode ep;
    ep.observations = MatrixXd::Zero(2, 20);
    for (int t = 0; t < 20; ++t) ep.observations.col(t) << t / 20.0, e / 4.0;
    ep.actions.resize(7, 20);
    for (int t = 0; t < 20; ++t) ep.actions.col(t) << 0.01, -0.005, 0.0, 0.0, 0.0, 0.02, 1.0;
    eps.push_back(ep);
  }
  return eps;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 16;
  c.hidden = 32;
  c.embed_dim = 8;
  c.diffusion_steps = 10;
  c.chunking = {2, 1};
  c.seed = 21;
  return c;
}

TEST_CASE("training is bit-identical under a fixed seed") {
  const auto data = delta_dataset();
  const TrainResult a = train(data, small_config());
  const TrainResult b = train(data, small_config());
  CHECK(a.policy.net.parameters() == b.policy.net.parameters());
  CHECK(a.log.epoch_loss == b.log.epoch_loss);
  CHECK(a.log.epoch_loss.size() == 5);
}

TEST_CASE("training rejects bad input") {
  CHECK_THROWS_AS(train({}, small_config()), std::invalid_argument);
  auto data = delta_dataset();
  data[1].observations = MatrixXd::Zero(3, 20);
  CHECK_THROWS_AS(train(data, small_config()), std::invalid_argument);
}

TEST_CASE("divergence aborts training") {
  TrainConfig c = small_config();
  c.learning_rate = 1e4;
  c.epochs = 50;
  CHECK_THROWS_AS(train(delta_dataset(), c), DivergenceError);
}

TEST_CASE("held-out split is by episode") {
  std::vector<PolicyEpisode> data;
  for (int i = 0; i < 5; ++i) {
    for (const auto& e : delta_dataset()) data.push_back(e);
  }
  TrainConfig c = small_config();
  c.epochs = 1;
  const TrainResult r = train(data, c);
  CHECK(r.log.holdout_episodes == 2);
  CHECK(r.log.train_episodes == 18);
  CHECK(r.log.holdout_samples == 40);
  CHECK(r.log.holdout_loss.size() == 1);
}

TEST_CASE("delta-distribution dataset concentrates samples") {
  TrainConfig c = small_config();
  c.optimizer = Optimizer::adam;
  c.epochs = 300;
  const auto data = delta_dataset();
  const TrainResult r = train(data, c);
  CHECK(r.log.final_loss < 0.5 * r.log.initial_loss);
  Rng rng = make_rng(22);
  const DiffusionPolicy& p = r.policy;
  std::vector<double> first;
  for (int i = 0; i < 100; ++i) {
    const VectorXd z =
        sample_chunk(p.net, p.obs_normalizer.normalize(data[0].observations.col(5)), p.schedule, rng, p.sampler);
    first.push_back(z[0]);
  }
  double mean = 0.0, sq = 0.0;
  for (double v : first) mean += v;
  mean /= first.size();
  for (double v : first) sq += (v - mean) * (v - mean);
  CHECK(std::sqrt(sq / first.size()) <= 0.1);
  const auto actions = p.sample(data[0].observations.col(5), rng);
  CHECK(actions.size() == 2);
  CHECK(std::abs(actions[0].translation.x() - 0.01) < 1e-3);
}

std::vector<PolicyEpisode> bimodal_dataset() {
  // the same observation stream with two opposite x motions
  std::vector<PolicyEpisode> eps;
  for (int e = 0; e < 40; ++e) {
    PolicyEpisode ep;
    ep.observations.resize(2, 10);
    ep.actions.resize(7, 10);
    const double x = e % 2 == 0 ? 0.02 : -0.02;
    for (int t = 0; t < 10; ++t) {
      ep.observations.col(t) << t / 10.0, 1.0;
      ep.actions.col(t) << x, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    }
    eps.push_back(ep);
  }
  return eps;
}

TEST_CASE("bimodal toy keeps both modes") {
  TrainConfig c = small_config();
  c.optimizer = Optimizer::adam;
  c.hidden = 64;
  c.diffusion_steps = 50;
  c.epochs = 200;
  c.batch_size = 32;
  const auto data = bimodal_dataset();
  const DiffusionPolicy p = train(data, c).policy;
  Rng rng = make_rng(23);
  int positive = 0, negative = 0;
  for (int i = 0; i < 200; ++i) {
    const double x = p.sample(data[0].observations.col(3), rng)[0].translation.x();
    positive += x > 0.01;
    negative += x < -0.01;
  }
  CHECK(positive >= 40);
  CHECK(negative >= 40);
}

TEST_CASE("checkpoint round trip and version errors") {
  const TrainResult r = train(delta_dataset(), small_config());
  const auto dir = std::filesystem::temp_directory_path() / "scenegen_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "p.ckpt";
  save_checkpoint(r.policy, path);
  const DiffusionPolicy back = load_checkpoint(path);
  CHECK(back.net.parameters() == r.policy.net.parameters());
  CHECK(back.schedule.betas() == r.policy.schedule.betas());
  CHECK(back.obs_normalizer.center() == r.policy.obs_normalizer.center());
  CHECK(back.action_normalizer.half_range() == r.policy.action_normalizer.half_range());
  CHECK(back.chunking.prediction_horizon == 2);

  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  {
    std::ofstream f(dir / "trunc.ckpt", std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "trunc.ckpt"), CheckpointError);
  {
    std::string other = bytes;
    other.replace(other.find("/1\n"), 3, "/9\n");
    std::ofstream f(dir / "v9.ckpt", std::ios::binary);
    f.write(other.data(), static_cast<std::streamsize>(other.size()));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "v9.ckpt"), doctest::Contains("not supported"),
                       CheckpointError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace scenegen
