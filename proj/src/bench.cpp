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

#include "scenegen/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace scenegen {
namespace {

using nlohmann::json;

const char* selection_name(SegmentSelection s) {
  return s == SegmentSelection::nearest ? "nearest" : "uniform";
}

json augment_json(const AugmentConfig& a) {
  return {{"bridge",
           {{"num_steps", a.bridge.num_steps},
            {"max_pos_step", a.bridge.max_pos_step},
            {"max_rot_step", a.bridge.max_rot_step}}},
          {"selection", selection_name(a.selection)}};
}

AugmentConfig augment_from_json(const json& j) {
  AugmentConfig a;
  if (j.contains("bridge")) {
    const json& b = j.at("bridge");
    a.bridge.num_steps = b.value("num_steps", a.bridge.num_steps);
    a.bridge.max_pos_step = b.value("max_pos_step", a.bridge.max_pos_step);
    a.bridge.max_rot_step = b.value("max_rot_step", a.bridge.max_rot_step);
  }
  if (j.contains("selection")) a.selection = parse_selection(j.at("selection").get<std::string>());
  a.bridge.validate();
  return a;
}

TrainConfig train_from_json(const json& j, TrainConfig c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  c.seed = j.value("seed", c.seed);
  c.diffusion_steps = j.value("diffusion_steps", c.diffusion_steps);
  c.hidden = j.value("hidden", c.hidden);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  if (j.contains("parameterization")) {
    c.parameterization = parse_parameterization(j.at("parameterization").get<std::string>());
  }
  c.chunking.prediction_horizon = j.value("prediction_horizon", c.chunking.prediction_horizon);
  c.chunking.execution_horizon = j.value("execution_horizon", c.chunking.execution_horizon);
  return c;
}

}  // namespace

// ---------------------------------------------------------------- config

TrainConfig BenchConfig::default_train_config() {
  TrainConfig c;
  c.epochs = 120;
  c.batch_size = 64;
  c.learning_rate = 1e-3;
  c.optimizer = Optimizer::adam;
  c.seed = 1;
  return c;
}

void BenchConfig::validate() const {
  augment.bridge.validate();
  train.validate();
  if (seed_demos < 1) throw std::invalid_argument("seed_demos must be >= 1");
  if (attempts_per_episode < 1) throw std::invalid_argument("attempts_per_episode must be >= 1");
  if (rollout_max_steps < 1) throw std::invalid_argument("rollout_max_steps must be >= 1");
  if (randomization.cap.num_poses < 1) throw std::invalid_argument("camera num_poses must be >= 1");
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"optimizer", optimizer_name(c.optimizer)},
          {"holdout_fraction", c.holdout_fraction},
          {"seed", c.seed},
          {"diffusion_steps", c.diffusion_steps},
          {"hidden", c.hidden},
          {"embed_dim", c.embed_dim},
          {"parameterization", parameterization_name(c.parameterization)},
          {"prediction_horizon", c.chunking.prediction_horizon},
          {"execution_horizon", c.chunking.execution_horizon}};
}

json to_json(const BenchConfig& c) {
  return {{"randomization", to_json(c.randomization)},
          {"augment", augment_json(c.augment)},
          {"seed_demos", c.seed_demos},
          {"seed_demo_seed", c.seed_demo_seed},
          {"attempts_per_episode", c.attempts_per_episode},
          {"train", to_json(c.train)},
          {"rollout_max_steps", c.rollout_max_steps}};
}

BenchConfig bench_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::set<std::string> known = {"randomization", "augment",
                                              "seed_demos",    "seed_demo_seed",
                                              "attempts_per_episode", "train",
                                              "rollout_max_steps"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  BenchConfig c;
  try {
    if (j.contains("randomization")) c.randomization = randomization_from_json(j.at("randomization"));
    if (j.contains("augment")) c.augment = augment_from_json(j.at("augment"));
    c.seed_demos = j.value("seed_demos", c.seed_demos);
    c.seed_demo_seed = j.value("seed_demo_seed", c.seed_demo_seed);
    c.attempts_per_episode = j.value("attempts_per_episode", c.attempts_per_episode);
    if (j.contains("train")) c.train = train_from_json(j.at("train"), c.train);
    c.rollout_max_steps = j.value("rollout_max_steps", c.rollout_max_steps);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return bench_config_from_json(j);
}

// ---------------------------------------------------------------- workers

int worker_count() {
  const char* text = std::getenv(kWorkersEnv);
  if (text == nullptr || *text == '\0') {
    return std::max(1U, std::thread::hardware_concurrency());
  }
  int n = 0;
  const char* end = text + std::char_traits<char>::length(text);
  const auto [ptr, ec] = std::from_chars(text, end, n);
  if (ec != std::errc() || ptr != end || n < 1) {
    throw std::invalid_argument(std::string(kWorkersEnv) + " must be a positive integer");
  }
  return n;
}

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  const size_t threads = std::min(n, static_cast<size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto work = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- generation

GenerationContext::GenerationContext(const TaskSpec& task, const BenchConfig& cfg)
    : world(task),
      rig(fibonacci_cap(cfg.randomization.cap)),
      seeds(make_seed_demos(world, rig, cfg.seed_demos, cfg.seed_demo_seed)) {}

GenerationResult generation_attempt(const GenerationContext& ctx, const BenchConfig& cfg,
                                    const FactorSet& factors, uint64_t master_seed,
                                    uint64_t attempt_index) {
  Rng rng = make_rng(generation_seed(master_seed, attempt_index));
  const SceneConfig scene = sample_scene(ctx.world.task(), factors, cfg.randomization, 0, rng);
  return generate_episode(ctx.world, ctx.seeds.demos, scene, ctx.rig, rng, cfg.augment);
}

Manifest generate_dataset(const std::string& task_id, const FactorSet& factors, size_t episodes,
                          uint64_t master_seed, const BenchConfig& cfg,
                          const std::filesystem::path& out, int workers) {
  cfg.validate();
  const TaskSpec task = builtin_task(task_id);
  const GenerationContext ctx(task, cfg);

  Manifest manifest;
  manifest.task_id = task.id;
  manifest.factors = factors;
  manifest.master_seed = master_seed;
  manifest.config = to_json(cfg);
  manifest.config["task"] = to_json(task);
  DatasetWriter writer(out, manifest);
  CameraScheduler scheduler(ctx.rig.size());

  const size_t budget = episodes * static_cast<size_t>(cfg.attempts_per_episode);
  const size_t min_block = static_cast<size_t>(std::max(workers, 1)) * 4;
  size_t written = 0;
  size_t attempts = 0;
  while (written < episodes) {
    if (attempts >= budget) {
      throw GenerationError("generation stopped after " + std::to_string(attempts) +
                            " attempts with " + std::to_string(written) + " of " +
                            std::to_string(episodes) + " episodes");
    }
    // the block size only affects throughput: merging is in attempt order
    // and stops at the requested count
    const size_t block = std::min(budget - attempts, std::max(episodes - written, min_block));
    std::vector<std::optional<GenerationResult>> results(block);
    parallel_for(block, workers, [&](size_t i) {
      results[i] = generation_attempt(ctx, cfg, factors, master_seed, attempts + i);
    });
    for (size_t i = 0; i < block && written < episodes; ++i) {
      const uint64_t index = attempts + i;
      auto* episode = std::get_if<GeneratedEpisode>(&*results[i]);
      if (factors.contains(Factor::camera)) {
        const int camera = scheduler.next(episode != nullptr);
        if (episode != nullptr) reobserve(ctx.world, *episode, ctx.rig, camera);
      }
      if (episode == nullptr) continue;
      writer.write_episode(make_record(*episode, written, generation_seed(master_seed, index)));
      ++written;
      if (written == episodes) attempts = index + 1;
    }
    if (written < episodes) attempts += block;
    results.clear();
  }
  return writer.finish(attempts);
}

TrainResult train_on_dataset(const Dataset& dataset, const TrainConfig& cfg) {
  std::vector<PolicyEpisode> episodes;
  episodes.reserve(dataset.episodes.size());
  for (const auto& e : dataset.episodes) episodes.push_back(to_policy_episode(e));
  return train(episodes, cfg);
}

std::filesystem::path checkpoint_info_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".json";
  return p;
}

// ---------------------------------------------------------------- evaluation

SceneConfig eval_scene(const GenerationContext& ctx, const BenchConfig& cfg,
                       const FactorSet& eval_factors, uint64_t master_seed, uint64_t index,
                       Rng& rng) {
  rng = make_rng(eval_seed(master_seed, index));
  const int camera = eval_factors.contains(Factor::camera)
                         ? std::uniform_int_distribution<int>(0, ctx.rig.size() - 1)(rng)
                         : 0;
  return sample_scene(ctx.world.task(), eval_factors, cfg.randomization, camera, rng);
}

EvalCell evaluate(const GenerationContext& ctx, const BenchConfig& cfg,
                  const PolicyFactory& make_policy, const ChunkingConfig& chunking,
                  const FactorSet& eval_factors, int rollouts, uint64_t master_seed,
                  int workers) {
  if (rollouts < 1) throw std::invalid_argument("rollouts must be >= 1");
  std::vector<char> success(static_cast<size_t>(rollouts), 0);
  parallel_for(success.size(), workers, [&](size_t r) {
    Rng rng;
    const SceneConfig scene = eval_scene(ctx, cfg, eval_factors, master_seed, r, rng);
    const std::unique_ptr<ChunkPolicy> policy = make_policy();
    success[r] =
        rollout(*policy, ctx.world, scene, ctx.rig, chunking, cfg.rollout_max_steps, rng).success;
  });
  EvalCell cell;
  cell.task = ctx.world.task().id;
  cell.eval_factor = eval_factors.str();
  cell.rollouts = rollouts;
  cell.successes = static_cast<int>(std::count(success.begin(), success.end(), 1));
  return cell;
}

// ---------------------------------------------------------------- reports

std::string format_rate(double rate) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, rate);
  return std::string(buf, ptr);
}

std::string eval_csv_header() { return "task,train_factors,eval_factor,rollouts,successes,rate"; }

std::string eval_csv_row(const EvalCell& c) {
  return c.task + ",\"" + c.train_factors + "\",\"" + c.eval_factor + "\"," +
         std::to_string(c.rollouts) + "," + std::to_string(c.successes) + "," +
         format_rate(c.rate());
}

std::string ablation_csv_header() { return eval_csv_header() + ",diagonal,status"; }

std::string ablation_csv_row(const EvalCell& c) {
  if (c.skipped) {
    return c.task + ",\"" + c.train_factors + "\",\"" + c.eval_factor + "\",0,,," +
           (c.diagonal() ? "1" : "0") + ",skipped";
  }
  return eval_csv_row(c) + "," + (c.diagonal() ? "1" : "0") + ",ok";
}

std::string markdown_matrix(std::span<const EvalCell> cells) {
  std::vector<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> counts;
  std::set<std::pair<std::string, std::string>> skipped;
  for (const auto& c : cells) {
    if (c.task == "all") continue;
    if (std::find(rows.begin(), rows.end(), c.train_factors) == rows.end()) {
      rows.push_back(c.train_factors);
    }
    if (std::find(cols.begin(), cols.end(), c.eval_factor) == cols.end()) {
      cols.push_back(c.eval_factor);
    }
    const auto key = std::make_pair(c.train_factors, c.eval_factor);
    if (c.skipped) {
      skipped.insert(key);
      continue;
    }
    counts[key].first += c.successes;
    counts[key].second += c.rollouts;
  }
  std::ostringstream os;
  os << "| train \\ eval |";
  for (const auto& c : cols) os << ' ' << c << " |";
  os << "\n|---|";
  for (size_t i = 0; i < cols.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& r : rows) {
    os << "| " << r << " |";
    for (const auto& c : cols) {
      const auto key = std::make_pair(r, c);
      const char* mark = r == c ? "*" : "";
      if (skipped.contains(key)) {
        os << " skipped" << mark << " |";
      } else if (const auto it = counts.find(key); it != counts.end()) {
        const auto [s, n] = it->second;
        os << ' ' << std::fixed << std::setprecision(2) << static_cast<double>(s) / n << mark
           << " (" << s << '/' << n << ") |";
      } else {
        os << " - |";
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string markdown_stats(const DatasetStats& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "| statistic | value |\n|---|---|\n";
  os << "| episodes | " << s.episodes << " |\n";
  if (!s.camera_counts.empty()) {
    const auto [lo, hi] = std::minmax_element(s.camera_counts.begin(), s.camera_counts.end());
    os << "| camera count range | " << *lo << " - " << *hi << " |\n";
  }
  os << "| camera balanced | " << (s.camera_balanced ? "yes" : "no") << " |\n";
  os << "| light mean | " << s.light_mean.x() << ", " << s.light_mean.y() << ", "
     << s.light_mean.z() << " |\n";
  const auto textures = std::count_if(s.texture_counts.begin(), s.texture_counts.end(),
                                      [](size_t n) { return n > 0; });
  os << "| textures used | " << textures << " |\n";
  os << "| table height | " << s.height_min << " .. " << s.height_max << " |\n";
  os << "| height histogram |";
  for (size_t n : s.height_histogram) os << ' ' << n;
  os << " |\n";
  for (const auto& [id, n] : s.embodiment_counts) os << "| embodiment " << id << " | " << n << " |\n";
  os << "| length min / mean / max | " << s.length_min << " / " << s.length_mean << " / "
     << s.length_max << " |\n";
  os << "| translation mean / max (m) | " << s.translation_mean << " / " << s.translation_max
     << " |\n";
  os << "| rotation mean / max (rad) | " << s.rotation_mean << " / " << s.rotation_max << " |\n";
  os << std::scientific << std::setprecision(2);
  os << "| action round-trip error (m) | " << s.action_roundtrip_error << " |\n";
  return os.str();
}

// ---------------------------------------------------------------- ablation

std::filesystem::path ablation_checkpoint(const std::filesystem::path& models_dir,
                                          const std::string& task, const FactorSet& regime) {
  return models_dir / (task + "_" + regime.str() + ".ckpt");
}

AblationResult run_ablation(const AblationRequest& request, const BenchConfig& cfg, int workers) {
  if (request.tasks.empty()) throw std::invalid_argument("ablation: empty task list");
  if (request.regimes.empty()) throw std::invalid_argument("ablation: empty regime list");
  if (request.eval_factors.empty()) throw std::invalid_argument("ablation: empty eval factor list");
  std::vector<FactorSet> regimes = request.regimes;
  if (std::find(regimes.begin(), regimes.end(), FactorSet{}) == regimes.end()) {
    regimes.insert(regimes.begin(), FactorSet{});
  }

  AblationResult result;
  for (const auto& task_id : request.tasks) {
    const GenerationContext ctx(builtin_task(task_id), cfg);
    for (const auto& regime : regimes) {
      const auto path = ablation_checkpoint(request.models_dir, task_id, regime);
      std::optional<DiffusionPolicy> policy;
      if (std::filesystem::exists(path)) policy = load_checkpoint(path);
      for (const auto& eval_factors : request.eval_factors) {
        EvalCell cell;
        if (policy) {
          const DiffusionPolicy& p = *policy;
          cell = evaluate(
              ctx, cfg, [&p] { return std::make_unique<DiffusionChunkPolicy>(p); }, p.chunking,
              eval_factors, request.rollouts, request.master_seed, workers);
        } else {
          cell.task = task_id;
          cell.eval_factor = eval_factors.str();
          cell.skipped = true;
          result.complete = false;
        }
        cell.train_factors = regime.str();
        result.cells.push_back(cell);
      }
    }
  }
  if (request.tasks.size() > 1) {
    const size_t per_task = result.cells.size() / request.tasks.size();
    for (size_t i = 0; i < per_task; ++i) {
      EvalCell all;
      all.task = "all";
      all.train_factors = result.cells[i].train_factors;
      all.eval_factor = result.cells[i].eval_factor;
      for (size_t t = 0; t < request.tasks.size(); ++t) {
        const EvalCell& c = result.cells[t * per_task + i];
        all.skipped = all.skipped || c.skipped;
        all.rollouts += c.rollouts;
        all.successes += c.successes;
      }
      if (all.skipped) all.rollouts = all.successes = 0;
      result.cells.push_back(all);
    }
  }
  return result;
}

}  // namespace scenegen
