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

#ifndef SCENEGEN_DATASET_HPP_
#define SCENEGEN_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "scenegen/augment.hpp"
#include "scenegen/policy.hpp"
#include "scenegen/randomize.hpp"
#include "scenegen/simworld.hpp"
#include "scenegen/trajectory.hpp"

namespace scenegen {

inline constexpr const char* kDatasetSchema = "scenegen-dataset/1";
inline constexpr const char* kGeneratorVersion = "scenegen-generator/1";

using StateVec = Eigen::Matrix<double, 8, 1>;

// position (3), quaternion wxyz (4), gripper opening (1)
StateVec state_vector(const EeState& s);
EeState state_from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

struct EpisodeRecord {
  uint64_t episode_index = 0;
  uint64_t seed = 0;
  SceneConfig scene;
  std::string embodiment_id = "panda";
  Eigen::MatrixXd states;        // 8 x T
  Eigen::MatrixXd observations;  // obs_dim x T
  Eigen::MatrixXd actions;       // 7 x T
  StateVec final_state = StateVec::Zero();
  std::vector<SubtaskSegment> segments;
  bool success = true;
  std::string generator_version = kGeneratorVersion;

  long length() const { return actions.cols(); }
  // Throws std::invalid_argument if array lengths disagree.
  void validate() const;
};

bool operator==(const EpisodeRecord& a, const EpisodeRecord& b);

EpisodeRecord make_record(const GeneratedEpisode& episode, uint64_t episode_index, uint64_t seed);
PolicyEpisode to_policy_episode(const EpisodeRecord& record);

struct Manifest {
  std::string schema_version = kDatasetSchema;
  std::string task_id;
  FactorSet factors;
  // everything that shaped generation (task, randomization, augmentation,
  // seed demonstrations)
  nlohmann::json config = nlohmann::json::object();
  uint64_t master_seed = 0;
  size_t episode_count = 0;
  size_t attempts = 0;
  double generation_success_rate = 0.0;
  nlohmann::json marginals = nlohmann::json::object();
  std::string content_hash;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

// Integrity failure: hash mismatch, truncation, malformed records.
class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Files written by a different schema version.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(std::string_view bytes);

// Single writer for a dataset directory holding `manifest`, `episodes.idx`
// and `episodes.bin`. Episodes are appended in call order.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path dir, Manifest manifest);
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  // Returns the number of bytes appended to episodes.bin.
  size_t write_episode(const EpisodeRecord& record);
  // Fills counts, marginals and the content hash, and writes the manifest.
  Manifest finish(size_t attempts);

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  std::string index_;
  std::string binary_;
  std::vector<SceneConfig> scenes_;
  std::vector<long> lengths_;
  bool finished_ = false;
};

struct Dataset {
  Manifest manifest;
  std::vector<EpisodeRecord> episodes;
};

// Verifies versions, per-episode hashes and the manifest content hash.
Dataset read_dataset(const std::filesystem::path& dir);
Manifest read_manifest(const std::filesystem::path& dir);
// Reads one episode through the index without decoding the others.
EpisodeRecord read_episode(const std::filesystem::path& dir, size_t position);

nlohmann::json compute_marginals(const std::vector<SceneConfig>& scenes,
                                 const std::vector<long>& lengths);

// Forward-accumulates the delta actions from the first stored state and
// returns the largest position error against the stored states (meters).
double action_roundtrip_error(const EpisodeRecord& record);

struct ReplayResult {
  bool success = false;
  double max_state_error = 0.0;
};

// Re-executes the stored actions from the stored scene in a fresh world.
ReplayResult replay_episode(const World& world, const EpisodeRecord& record);

struct DatasetStats {
  size_t episodes = 0;
  std::vector<size_t> camera_counts;
  bool camera_balanced = false;
  Vec3 light_mean = Vec3::Zero();
  std::vector<size_t> texture_counts;
  double height_min = 0.0;
  double height_max = 0.0;
  std::vector<size_t> height_histogram;
  std::map<std::string, size_t> embodiment_counts;
  double length_min = 0.0;
  double length_max = 0.0;
  double length_mean = 0.0;
  double translation_mean = 0.0;
  double translation_max = 0.0;
  double rotation_mean = 0.0;
  double rotation_max = 0.0;
  double action_roundtrip_error = 0.0;
};

inline constexpr int kHeightBins = 10;

DatasetStats dataset_stats(const Dataset& dataset);
nlohmann::json to_json(const DatasetStats& stats);

}  // namespace scenegen

#endif  // SCENEGEN_DATASET_HPP_
