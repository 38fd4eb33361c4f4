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

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "scenegen/bench.hpp"

namespace scenegen {
namespace {

using nlohmann::json;

// Missing or unreadable inputs named on the command line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("write failed for " + path.string());
}

void require_exists(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::exists(path)) throw DataError(std::string(what) + " not found: " + path.string());
}

// Comma separated list; '+' joins factors inside one entry.
std::vector<FactorSet> parse_factor_list(const std::string& text) {
  std::vector<FactorSet> sets;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    std::replace(item.begin(), item.end(), '+', ',');
    sets.push_back(FactorSet::Parse(item));
  }
  return sets;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

struct Options {
  std::string task = "stack";
  std::string factors = "none";
  size_t episodes = 200;
  int rollouts = 50;
  uint64_t seed = 0;
  std::string out;
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string models;
  std::string regimes;
  std::string train_factors;
  std::optional<int> epochs;
  bool expert = false;
};

BenchConfig bench_config(const Options& o) {
  return o.config.empty() ? BenchConfig{} : load_bench_config(o.config);
}

int cmd_generate(const Options& o, std::ostream& out) {
  const BenchConfig cfg = bench_config(o);
  const FactorSet factors = FactorSet::Parse(o.factors);
  if (o.episodes < 1) throw std::invalid_argument("--episodes must be >= 1");
  builtin_task(o.task);
  const int workers = worker_count();
  const Manifest m = generate_dataset(o.task, factors, o.episodes, o.seed, cfg, o.out, workers);
  out << "generated " << m.episode_count << " episodes of " << m.task_id << " (factors "
      << m.factors.str() << ") in " << m.attempts << " attempts\n"
      << "generation success rate " << std::fixed << std::setprecision(4)
      << m.generation_success_rate << "\n"
      << "content hash " << m.content_hash << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  BenchConfig cfg = bench_config(o);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  cfg.train.seed = o.seed == 0 ? cfg.train.seed : o.seed;
  cfg.validate();
  require_exists(o.data, "dataset");
  const Dataset dataset = read_dataset(o.data);
  out << "training on " << dataset.episodes.size() << " episodes of " << dataset.manifest.task_id
      << " (factors " << dataset.manifest.factors.str() << ")\n";
  TrainConfig tc = cfg.train;
  tc.on_epoch = [&out, epochs = tc.epochs](int e, double loss, double holdout) {
    if (e % 10 == 0 || e + 1 == epochs) {
      out << "epoch " << e << " loss " << std::setprecision(5) << loss << " holdout " << holdout
          << "\n"
          << std::flush;
    }
  };
  const TrainResult result = train_on_dataset(dataset, tc);
  const std::filesystem::path ckpt(o.out);
  if (ckpt.has_parent_path()) std::filesystem::create_directories(ckpt.parent_path());
  save_checkpoint(result.policy, ckpt);
  const json info = {{"task", dataset.manifest.task_id},
                     {"train_factors", dataset.manifest.factors.str()},
                     {"dataset", o.data},
                     {"dataset_hash", dataset.manifest.content_hash},
                     {"train", to_json(cfg.train)},
                     {"initial_loss", result.log.initial_loss},
                     {"final_loss", result.log.final_loss},
                     {"train_samples", result.log.train_samples},
                     {"holdout_samples", result.log.holdout_samples}};
  write_text(checkpoint_info_path(o.out), info.dump(2) + "\n");
  out << "loss " << result.log.initial_loss << " -> " << result.log.final_loss << "\n"
      << "checkpoint " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const BenchConfig cfg = bench_config(o);
  const std::vector<FactorSet> eval_factors = parse_factor_list(o.factors);
  if (eval_factors.empty()) throw std::invalid_argument("--factors: empty eval factor list");
  if (o.rollouts < 1) throw std::invalid_argument("--rollouts must be >= 1");
  if (o.expert == !o.checkpoint.empty()) {
    throw std::invalid_argument("eval needs exactly one of --checkpoint and --expert");
  }

  std::string task = o.task;
  std::string label = o.expert ? "expert" : "unknown";
  std::optional<DiffusionPolicy> policy;
  if (!o.expert) {
    require_exists(o.checkpoint, "checkpoint");
    policy = load_checkpoint(o.checkpoint);
    if (const auto info_path = checkpoint_info_path(o.checkpoint); std::filesystem::exists(info_path)) {
      std::ifstream f(info_path);
      const json info = json::parse(f, nullptr, false);
      if (info.is_object()) label = info.value("train_factors", label);
    }
  }
  if (!o.train_factors.empty()) label = o.train_factors;

  const GenerationContext ctx(builtin_task(task), cfg);
  const int workers = worker_count();
  PolicyFactory factory;
  ChunkingConfig chunking;
  if (policy) {
    const DiffusionPolicy& p = *policy;
    factory = [&p] { return std::make_unique<DiffusionChunkPolicy>(p); };
    chunking = p.chunking;
  } else {
    factory = [] { return std::make_unique<ExpertPolicy>(); };
  }
  std::string csv = eval_csv_header() + "\n";
  for (const auto& f : eval_factors) {
    EvalCell cell = evaluate(ctx, cfg, factory, chunking, f, o.rollouts, o.seed, workers);
    cell.train_factors = label;
    csv += eval_csv_row(cell) + "\n";
  }
  if (o.out.empty()) {
    out << csv;
  } else {
    write_text(o.out, csv);
    out << csv << "results " << o.out << "\n";
  }
  return kExitOk;
}

int cmd_ablation(const Options& o, std::ostream& out, std::ostream& err) {
  const BenchConfig cfg = bench_config(o);
  AblationRequest request;
  request.tasks = split(o.task);
  request.regimes = parse_factor_list(o.regimes);
  request.eval_factors = parse_factor_list(o.factors);
  request.models_dir = o.models;
  request.rollouts = o.rollouts;
  request.master_seed = o.seed;
  if (request.rollouts < 1) throw std::invalid_argument("--rollouts must be >= 1");
  if (request.regimes.empty()) throw std::invalid_argument("--regimes: empty regime list");
  if (request.eval_factors.empty()) throw std::invalid_argument("--factors: empty eval factor list");
  for (const auto& t : request.tasks) builtin_task(t);

  const AblationResult result = run_ablation(request, cfg, worker_count());
  std::string csv = ablation_csv_header() + "\n";
  for (const auto& c : result.cells) csv += ablation_csv_row(c) + "\n";
  const std::string table = markdown_matrix(result.cells);
  write_text(o.out, csv);
  std::filesystem::path md = o.out;
  md.replace_extension(".md");
  write_text(md, table);
  out << table << "results " << o.out << ", " << md.string() << "\n";
  if (!result.complete) {
    for (const auto& c : result.cells) {
      if (c.skipped && c.task != "all") {
        err << "missing checkpoint "
            << ablation_checkpoint(request.models_dir, c.task, FactorSet::Parse(c.train_factors))
                   .string()
            << " (eval " << c.eval_factor << " skipped)\n";
      }
    }
    return kExitData;
  }
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  require_exists(o.data, "dataset");
  const Dataset dataset = read_dataset(o.data);
  const DatasetStats stats = dataset_stats(dataset);
  out << "dataset " << o.data << ": task " << dataset.manifest.task_id << ", factors "
      << dataset.manifest.factors.str() << ", generation success rate "
      << dataset.manifest.generation_success_rate << "\n\n"
      << markdown_stats(stats);
  if (!o.out.empty()) write_text(o.out, to_json(stats).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scene-randomized demonstration generation and diffusion policy benchmarks",
               "scenegen"};
  app.require_subcommand(1);
  Options o;
  const auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON experiment configuration");
  };

  CLI::App* gen = app.add_subcommand("generate", "Generate a randomized demonstration dataset");
  gen->add_option("--task", o.task, "Task id")->capture_default_str();
  gen->add_option("--factors", o.factors, "Comma separated randomization factors or none")
      ->capture_default_str();
  gen->add_option("--episodes", o.episodes, "Successful episodes to store")->capture_default_str();
  gen->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  gen->add_option("--out", o.out, "Dataset directory")->required();
  add_config(gen);

  CLI::App* tr = app.add_subcommand("train", "Train a diffusion policy on a dataset");
  tr->add_option("--data", o.data, "Dataset directory")->required();
  tr->add_option("--out", o.out, "Checkpoint path")->required();
  tr->add_option("--seed", o.seed, "Training seed (0 keeps the configured one)");
  tr->add_option("--epochs", o.epochs, "Override the configured epoch count");
  add_config(tr);

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a policy with closed-loop rollouts");
  ev->add_option("--checkpoint", o.checkpoint, "Policy checkpoint");
  ev->add_flag("--expert", o.expert, "Evaluate the scripted expert instead of a checkpoint");
  ev->add_option("--task", o.task, "Task id")->capture_default_str();
  ev->add_option("--factors", o.factors, "Comma separated eval factors, one cell each")
      ->capture_default_str();
  ev->add_option("--rollouts", o.rollouts, "Rollouts per cell")->capture_default_str();
  ev->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  ev->add_option("--train-factors", o.train_factors, "Label of the training regime");
  ev->add_option("--out", o.out, "CSV output path");
  add_config(ev);

  CLI::App* ab = app.add_subcommand("ablation", "Train regime by eval factor success matrix");
  ab->add_option("--task", o.task, "Comma separated task ids")->capture_default_str();
  ab->add_option("--regimes", o.regimes, "Comma separated training regimes ('+' joins factors)")
      ->required();
  ab->add_option("--factors", o.factors, "Comma separated eval factors")->required();
  ab->add_option("--models", o.models, "Directory of <task>_<regime>.ckpt checkpoints")
      ->required();
  ab->add_option("--rollouts", o.rollouts, "Rollouts per cell")->capture_default_str();
  ab->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  ab->add_option("--out", o.out, "CSV output path; a Markdown table is written next to it")
      ->required();
  add_config(ab);

  CLI::App* st = app.add_subcommand("stats", "Summarize and verify a dataset");
  st->add_option("--data", o.data, "Dataset directory")->required();
  st->add_option("--out", o.out, "JSON output path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (ab->parsed()) return cmd_ablation(o, out, err);
    if (st->parsed()) return cmd_stats(o, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const CorruptionError& e) {
    err << "corrupt dataset: " << e.what() << "\n";
    return kExitData;
  } catch (const VersionError& e) {
    err << "unsupported dataset: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "bad checkpoint: " << e.what() << "\n";
    return kExitData;
  } catch (const GenerationError& e) {
    err << "generation failed: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace scenegen
