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

#ifndef SCENEGEN_BENCH_HPP_
#define SCENEGEN_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenegen/augment.hpp"
#include "scenegen/dataset.hpp"
#include "scenegen/policy.hpp"
#include "scenegen/randomize.hpp"
#include "scenegen/simworld.hpp"

namespace scenegen {

inline constexpr const char* kWorkersEnv = "SCENEGEN_WORKERS";

// Everything besides the command line flags that shapes an experiment.
// Loaded from the --config JSON file; missing keys keep these defaults.
struct BenchConfig {
  RandomizationConfig randomization;
  AugmentConfig augment;
  int seed_demos = 10;
  uint64_t seed_demo_seed = 7;
  // generation gives up after this many attempts per requested episode
  int attempts_per_episode = 20;
  TrainConfig train = default_train_config();
  int rollout_max_steps = 300;

  static TrainConfig default_train_config();
  // Throws std::invalid_argument.
  void validate() const;
};

nlohmann::json to_json(const BenchConfig& cfg);
// Throws std::invalid_argument on malformed values or unknown top-level
// keys.
BenchConfig bench_config_from_json(const nlohmann::json& j);
// Throws std::invalid_argument if the file cannot be read or parsed.
BenchConfig load_bench_config(const std::filesystem::path& path);

nlohmann::json to_json(const TrainConfig& cfg);

// Value of SCENEGEN_WORKERS, or the hardware concurrency when unset.
// Throws std::invalid_argument on a malformed value.
int worker_count();

// Runs fn(i) for i in [0, n) on `workers` threads. The first exception
// thrown by any call is rethrown after all threads have joined.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

// Generation stopped before reaching the requested episode count.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shared read-only inputs of a generation run for one task.
struct GenerationContext {
  World world;
  CameraRig rig;
  SeedSet seeds;

  GenerationContext(const TaskSpec& task, const BenchConfig& cfg);
};

// One generation attempt: scene from generation_seed(master, index), then
// trajectory augmentation. The camera index is left at 0; it is assigned
// when attempts are merged.
GenerationResult generation_attempt(const GenerationContext& ctx, const BenchConfig& cfg,
                                    const FactorSet& factors, uint64_t master_seed,
                                    uint64_t attempt_index);

// Generates `episodes` successful episodes into `out`. Attempts run on
// `workers` threads and are merged in attempt order through a single camera
// scheduler, so the dataset does not depend on the worker count. Throws
// GenerationError when the attempt budget runs out.
Manifest generate_dataset(const std::string& task_id, const FactorSet& factors, size_t episodes,
                          uint64_t master_seed, const BenchConfig& cfg,
                          const std::filesystem::path& out, int workers);

// Trains on every episode of a dataset.
TrainResult train_on_dataset(const Dataset& dataset, const TrainConfig& cfg);

// Sidecar written next to a checkpoint by the train command.
std::filesystem::path checkpoint_info_path(const std::filesystem::path& checkpoint);

struct EvalCell {
  std::string task;
  std::string train_factors;
  std::string eval_factor;
  int rollouts = 0;
  int successes = 0;
  bool skipped = false;

  double rate() const {
    return rollouts > 0 ? static_cast<double>(successes) / rollouts : 0.0;
  }
  bool diagonal() const { return train_factors == eval_factor; }
};

using PolicyFactory = std::function<std::unique_ptr<ChunkPolicy>()>;

// Scene for evaluation rollout `index`. `rng` is reseeded from
// eval_seed(master, index), drives the camera draw (uniform over the rig
// when the camera factor is on) and the scene sampler, and is then left for
// the rollout itself.
SceneConfig eval_scene(const GenerationContext& ctx, const BenchConfig& cfg,
                       const FactorSet& eval_factors, uint64_t master_seed, uint64_t index,
                       Rng& rng);

// Closed-loop success over `rollouts` rollouts; one policy instance per
// rollout.
EvalCell evaluate(const GenerationContext& ctx, const BenchConfig& cfg,
                  const PolicyFactory& make_policy, const ChunkingConfig& chunking,
                  const FactorSet& eval_factors, int rollouts, uint64_t master_seed,
                  int workers);

std::string eval_csv_header();
std::string eval_csv_row(const EvalCell& cell);
std::string ablation_csv_header();
std::string ablation_csv_row(const EvalCell& cell);
// Shortest decimal that round-trips the rate.
std::string format_rate(double rate);

// Train regime rows by eval factor columns, averaged over tasks; diagonal
// cells are marked with an asterisk.
std::string markdown_matrix(std::span<const EvalCell> cells);
std::string markdown_stats(const DatasetStats& stats);

struct AblationRequest {
  std::vector<std::string> tasks;
  std::vector<FactorSet> regimes;
  std::vector<FactorSet> eval_factors;
  // checkpoint for (task, regime): models_dir / "<task>_<regime>.ckpt"
  std::filesystem::path models_dir;
  int rollouts = 50;
  uint64_t master_seed = 0;
};

std::filesystem::path ablation_checkpoint(const std::filesystem::path& models_dir,
                                          const std::string& task, const FactorSet& regime);

struct AblationResult {
  // per task cells followed, for more than one task, by aggregate rows with
  // task "all"
  std::vector<EvalCell> cells;
  bool complete = true;
};

// Evaluates every (task, regime, eval factor) cell. The no-augmentation
// regime is added when absent. Missing checkpoints produce skipped cells.
// Throws std::invalid_argument on an empty task or regime list.
AblationResult run_ablation(const AblationRequest& request, const BenchConfig& cfg,
                            int workers);

// Command line entry point. Returns the process exit code.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scenegen

#endif  // SCENEGEN_BENCH_HPP_
