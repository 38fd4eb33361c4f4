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

#include "scenegen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "binary_io.hpp"

namespace scenegen {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kIndexTag = "scenegen-dataset/1 index";
constexpr const char* kBinaryTag = "scenegen-dataset/1 episodes\n";

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CorruptionError("missing dataset file " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

json segment_json(const SubtaskSegment& s) {
  return {{"start", s.start},
          {"end", s.end},
          {"subtask_id", s.subtask_id},
          {"reference_object_id", s.reference_object_id},
          {"reference_object_pose", pose_json(s.reference_object_pose)}};
}

SubtaskSegment segment_from_json(const json& j) {
  SubtaskSegment s;
  s.start = j.at("start");
  s.end = j.at("end");
  s.subtask_id = j.at("subtask_id");
  s.reference_object_id = j.at("reference_object_id");
  s.reference_object_pose = pose_from_json(j.at("reference_object_pose"));
  return s;
}

// Fixed fields of an index line, without the storage location.
json record_meta(const EpisodeRecord& r) {
  json segments = json::array();
  for (const auto& s : r.segments) segments.push_back(segment_json(s));
  return {{"episode_index", r.episode_index},
          {"seed", r.seed},
          {"scene", to_json(r.scene)},
          {"embodiment_id", r.embodiment_id},
          {"length", r.length()},
          {"obs_dim", r.observations.rows()},
          {"segments", segments},
          {"success", r.success},
          {"generator_version", r.generator_version}};
}

void put_matrix(std::string& out, const Eigen::MatrixXd& m) {
  for (long i = 0; i < m.size(); ++i) io::put_f64(out, m.data()[i]);
}

Eigen::MatrixXd get_matrix(io::Reader& r, long rows, long cols) {
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  return m;
}

std::string encode_block(const EpisodeRecord& r) {
  std::string out;
  io::put_u64(out, static_cast<uint64_t>(r.length()));
  io::put_u64(out, static_cast<uint64_t>(r.observations.rows()));
  put_matrix(out, r.states);
  put_matrix(out, r.observations);
  put_matrix(out, r.actions);
  put_matrix(out, r.final_state);
  return out;
}

EpisodeRecord decode(const json& meta, std::string_view block) {
  EpisodeRecord r;
  r.episode_index = meta.at("episode_index");
  r.seed = meta.at("seed");
  r.scene = scene_from_json(meta.at("scene"));
  r.embodiment_id = meta.at("embodiment_id");
  for (const auto& s : meta.at("segments")) r.segments.push_back(segment_from_json(s));
  r.success = meta.at("success");
  r.generator_version = meta.at("generator_version");
  io::Reader reader(block);
  const auto length = static_cast<long>(reader.u64());
  const auto obs_dim = static_cast<long>(reader.u64());
  if (length != meta.at("length").get<long>() || obs_dim != meta.at("obs_dim").get<long>()) {
    throw CorruptionError("episode block disagrees with its index entry");
  }
  r.states = get_matrix(reader, 8, length);
  r.observations = get_matrix(reader, obs_dim, length);
  r.actions = get_matrix(reader, Action::kDim, length);
  r.final_state = get_matrix(reader, 8, 1);
  if (reader.remaining() != 0) throw CorruptionError("episode block has trailing bytes");
  r.validate();
  return r;
}

struct IndexEntry {
  json meta;
  size_t offset = 0;
  size_t bytes = 0;
  std::string sha256;
};

struct RawDataset {
  Manifest manifest;
  std::vector<IndexEntry> entries;
  std::string binary;
};

Manifest load_manifest(const fs::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "manifest"));
  } catch (const json::exception& e) {
    throw CorruptionError("unreadable manifest: " + std::string(e.what()));
  }
  const std::string version = j.value("schema_version", "");
  if (version != kDatasetSchema) {
    throw VersionError("dataset schema '" + version + "' is not supported by this build (expects '" +
                       kDatasetSchema + "'); regenerate the dataset or upgrade scenegen");
  }
  try {
    return manifest_from_json(j);
  } catch (const json::exception& e) {
    throw CorruptionError("malformed manifest: " + std::string(e.what()));
  }
}

RawDataset load_raw(const fs::path& dir) {
  RawDataset raw;
  raw.manifest = load_manifest(dir);
  const std::string index = read_file(dir / "episodes.idx");
  raw.binary = read_file(dir / "episodes.bin");

  std::istringstream lines(index);
  std::string line;
  std::getline(lines, line);
  if (line != kIndexTag) {
    if (line.rfind("scenegen-dataset/", 0) == 0) {
      throw VersionError("index version '" + line + "' is not supported; regenerate the dataset");
    }
    throw CorruptionError("episodes.idx has no version header");
  }
  const std::string_view tag(kBinaryTag);
  if (raw.binary.compare(0, tag.size(), tag) != 0) {
    if (raw.binary.rfind("scenegen-dataset/", 0) == 0) {
      throw VersionError("episode file version is not supported; regenerate the dataset");
    }
    throw CorruptionError("episodes.bin has no version header");
  }
  size_t expected_offset = tag.size();
  std::string content;
  while (std::getline(lines, line)) {
    if (lines.eof() && !index.empty() && index.back() != '\n') {
      throw CorruptionError("episodes.idx ends mid-record (truncated)");
    }
    content += line + "\n";
    IndexEntry e;
    try {
      const json j = json::parse(line);
      e.offset = j.at("offset");
      e.bytes = j.at("bytes");
      e.sha256 = j.at("sha256");
      e.meta = j;
    } catch (const json::exception& ex) {
      throw CorruptionError("malformed index record " + std::to_string(raw.entries.size()) + ": " +
                            ex.what());
    }
    if (e.offset != expected_offset || e.offset + e.bytes > raw.binary.size()) {
      throw CorruptionError("episode " + std::to_string(raw.entries.size()) +
                            " lies outside episodes.bin (truncated)");
    }
    expected_offset += e.bytes;
    raw.entries.push_back(std::move(e));
  }
  if (expected_offset != raw.binary.size()) {
    throw CorruptionError("episodes.bin size does not match the index (truncated or padded)");
  }
  if (raw.entries.size() != raw.manifest.episode_count) {
    throw CorruptionError("index holds " + std::to_string(raw.entries.size()) +
                          " episodes, manifest says " + std::to_string(raw.manifest.episode_count));
  }
  if (sha256_hex(content) != raw.manifest.content_hash) {
    throw CorruptionError("content hash mismatch");
  }
  return raw;
}

EpisodeRecord decode_entry(const RawDataset& raw, size_t i) {
  const IndexEntry& e = raw.entries[i];
  const std::string_view block = std::string_view(raw.binary).substr(e.offset, e.bytes);
  if (sha256_hex(block) != e.sha256) {
    throw CorruptionError("episode " + std::to_string(i) + " payload hash mismatch");
  }
  try {
    return decode(e.meta, block);
  } catch (const CorruptionError&) {
    throw;
  } catch (const std::exception& ex) {
    throw CorruptionError("episode " + std::to_string(i) + " is malformed: " + ex.what());
  }
}

}  // namespace

StateVec state_vector(const EeState& s) {
  StateVec v;
  const auto& q = s.ee.rotation.wxyz();
  v << s.ee.translation, q[0], q[1], q[2], q[3], s.gripper_opening;
  return v;
}

EeState state_from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != 8) throw std::invalid_argument("state vector must have 8 entries");
  return {{Rotation::FromStored({v[3], v[4], v[5], v[6]}), Vec3(v[0], v[1], v[2])}, v[7]};
}

void EpisodeRecord::validate() const {
  const long t = actions.cols();
  if (actions.rows() != Action::kDim || states.rows() != 8 || states.cols() != t ||
      observations.cols() != t) {
    throw std::invalid_argument("episode arrays disagree in length");
  }
  for (const auto& s : segments) {
    if (s.start > s.end || s.end > static_cast<size_t>(t)) {
      throw std::invalid_argument("segment outside the episode");
    }
  }
}

bool operator==(const EpisodeRecord& a, const EpisodeRecord& b) {
  const auto same_segments = [&] {
    if (a.segments.size() != b.segments.size()) return false;
    for (size_t i = 0; i < a.segments.size(); ++i) {
      const auto &x = a.segments[i], &y = b.segments[i];
      if (x.start != y.start || x.end != y.end || x.subtask_id != y.subtask_id ||
          x.reference_object_id != y.reference_object_id ||
          !(x.reference_object_pose == y.reference_object_pose)) {
        return false;
      }
    }
    return true;
  };
  const auto same = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return a.episode_index == b.episode_index && a.seed == b.seed && a.scene == b.scene &&
         a.embodiment_id == b.embodiment_id && same(a.states, b.states) &&
         same(a.observations, b.observations) && same(a.actions, b.actions) &&
         a.final_state == b.final_state && same_segments() && a.success == b.success &&
         a.generator_version == b.generator_version;
}

EpisodeRecord make_record(const GeneratedEpisode& episode, uint64_t episode_index, uint64_t seed) {
  const auto& steps = episode.demo.timesteps;
  EpisodeRecord r;
  r.episode_index = episode_index;
  r.seed = seed;
  r.scene = episode.scene;
  r.embodiment_id = episode.demo.embodiment_id;
  const long t = static_cast<long>(steps.size());
  const long d = t > 0 ? steps.front().observation.size() : 0;
  r.states.resize(8, t);
  r.observations.resize(d, t);
  r.actions.resize(Action::kDim, t);
  for (long i = 0; i < t; ++i) {
    r.states.col(i) = state_vector(steps[i].state);
    r.observations.col(i) = steps[i].observation;
    r.actions.col(i) = steps[i].action.vector();
  }
  r.final_state = state_vector(episode.demo.final_state);
  r.segments = episode.demo.segments;
  r.success = true;
  return r;
}

PolicyEpisode to_policy_episode(const EpisodeRecord& record) {
  return {record.observations, record.actions};
}

json to_json(const Manifest& m) {
  return {{"schema_version", m.schema_version},
          {"task", m.task_id},
          {"factors", m.factors.str()},
          {"config", m.config},
          {"master_seed", m.master_seed},
          {"episode_count", m.episode_count},
          {"attempts", m.attempts},
          {"generation_success_rate", m.generation_success_rate},
          {"marginals", m.marginals},
          {"content_hash", m.content_hash}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.schema_version = j.at("schema_version");
  m.task_id = j.at("task");
  m.factors = FactorSet::Parse(j.at("factors").get<std::string>());
  m.config = j.at("config");
  m.master_seed = j.at("master_seed");
  m.episode_count = j.at("episode_count");
  m.attempts = j.at("attempts");
  m.generation_success_rate = j.at("generation_success_rate");
  m.marginals = j.at("marginals");
  m.content_hash = j.at("content_hash");
  return m;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < size; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

DatasetWriter::DatasetWriter(fs::path dir, Manifest manifest)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {
  fs::create_directories(dir_);
  index_ = std::string(kIndexTag) + "\n";
  binary_ = kBinaryTag;
}

size_t DatasetWriter::write_episode(const EpisodeRecord& record) {
  if (finished_) throw std::logic_error("dataset writer already finished");
  record.validate();
  if (!record.success) throw std::invalid_argument("only successful episodes are stored");
  const std::string block = encode_block(record);
  json line = record_meta(record);
  line["offset"] = binary_.size();
  line["bytes"] = block.size();
  line["sha256"] = sha256_hex(block);
  index_ += line.dump() + "\n";
  binary_ += block;
  scenes_.push_back(record.scene);
  lengths_.push_back(record.length());
  return block.size();
}

Manifest DatasetWriter::finish(size_t attempts) {
  if (finished_) throw std::logic_error("dataset writer already finished");
  finished_ = true;
  manifest_.schema_version = kDatasetSchema;
  manifest_.episode_count = scenes_.size();
  manifest_.attempts = attempts;
  manifest_.generation_success_rate =
      attempts == 0 ? 0.0 : static_cast<double>(scenes_.size()) / static_cast<double>(attempts);
  manifest_.marginals = compute_marginals(scenes_, lengths_);
  manifest_.content_hash = sha256_hex(std::string_view(index_).substr(index_.find('\n') + 1));
  write_file(dir_ / "episodes.bin", binary_);
  write_file(dir_ / "episodes.idx", index_);
  write_file(dir_ / "manifest", to_json(manifest_).dump(2) + "\n");
  return manifest_;
}

Manifest read_manifest(const fs::path& dir) { return load_manifest(dir); }

Dataset read_dataset(const fs::path& dir) {
  const RawDataset raw = load_raw(dir);
  Dataset d;
  d.manifest = raw.manifest;
  d.episodes.reserve(raw.entries.size());
  for (size_t i = 0; i < raw.entries.size(); ++i) d.episodes.push_back(decode_entry(raw, i));
  return d;
}

EpisodeRecord read_episode(const fs::path& dir, size_t position) {
  const RawDataset raw = load_raw(dir);
  if (position >= raw.entries.size()) throw std::out_of_range("episode position out of range");
  return decode_entry(raw, position);
}

json compute_marginals(const std::vector<SceneConfig>& scenes, const std::vector<long>& lengths) {
  std::map<std::string, size_t> cameras, embodiments;
  std::vector<size_t> textures(kNumTextures, 0);
  Vec3 light = Vec3::Zero();
  double hmin = 0.0, hmax = 0.0, hsum = 0.0;
  for (size_t i = 0; i < scenes.size(); ++i) {
    const SceneConfig& s = scenes[i];
    ++cameras[std::to_string(s.camera_index)];
    ++embodiments[s.embodiment_id];
    if (s.texture_id >= 0 && s.texture_id < kNumTextures) ++textures[s.texture_id];
    light += s.light;
    hmin = i == 0 ? s.table_height_delta : std::min(hmin, s.table_height_delta);
    hmax = i == 0 ? s.table_height_delta : std::max(hmax, s.table_height_delta);
    hsum += s.table_height_delta;
  }
  const double n = std::max<double>(1.0, static_cast<double>(scenes.size()));
  long lmin = 0, lmax = 0, lsum = 0;
  for (size_t i = 0; i < lengths.size(); ++i) {
    lmin = i == 0 ? lengths[i] : std::min(lmin, lengths[i]);
    lmax = i == 0 ? lengths[i] : std::max(lmax, lengths[i]);
    lsum += lengths[i];
  }
  return {{"camera_counts", cameras},
          {"light_mean", {light.x() / n, light.y() / n, light.z() / n}},
          {"texture_counts", textures},
          {"table_height", {{"min", hmin}, {"max", hmax}, {"mean", hsum / n}}},
          {"embodiment_counts", embodiments},
          {"episode_length",
           {{"min", lmin}, {"max", lmax}, {"mean", static_cast<double>(lsum) / std::max<double>(1.0, static_cast<double>(lengths.size()))}}}};
}

double action_roundtrip_error(const EpisodeRecord& record) {
  if (record.length() == 0) return 0.0;
  Pose pose = state_from_vector(record.states.col(0)).ee;
  double worst = 0.0;
  for (long t = 0; t < record.length(); ++t) {
    const Pose stored = state_from_vector(record.states.col(t)).ee;
    worst = std::max(worst, (pose.translation - stored.translation).norm());
    pose = compose(pose, Action::FromVector(record.actions.col(t)).delta());
  }
  const Pose final_pose = state_from_vector(record.final_state).ee;
  return std::max(worst, (pose.translation - final_pose.translation).norm());
}

ReplayResult replay_episode(const World& world, const EpisodeRecord& record) {
  Rng rng = make_rng(record.seed);
  WorldState s = world.reset(record.scene, rng);
  ReplayResult r;
  for (long t = 0; t < record.length(); ++t) {
    const Pose stored = state_from_vector(record.states.col(t)).ee;
    r.max_state_error = std::max(r.max_state_error, translation_distance(s.ee, stored));
    s = world.step(s, Action::FromVector(record.actions.col(t)));
  }
  r.max_state_error = std::max(
      r.max_state_error, translation_distance(s.ee, state_from_vector(record.final_state).ee));
  r.success = world.check_success(s);
  return r;
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats st;
  const auto& eps = dataset.episodes;
  st.episodes = eps.size();
  RandomizationConfig cfg;
  if (dataset.manifest.config.contains("randomization")) {
    cfg = randomization_from_json(dataset.manifest.config.at("randomization"));
  }
  const FactorSet& factors = dataset.manifest.factors;
  const int cameras = factors.contains(Factor::camera) ? cfg.cap.num_poses : 1;
  st.camera_counts.assign(std::max(cameras, 1), 0);
  st.texture_counts.assign(kNumTextures, 0);
  st.height_min = factors.contains(Factor::height) ? cfg.height.min : 0.0;
  st.height_max = factors.contains(Factor::height) ? cfg.height.max : 0.0;
  st.height_histogram.assign(kHeightBins, 0);
  bool cameras_in_range = true;
  double steps = 0.0, translation_sum = 0.0, rotation_sum = 0.0, length_sum = 0.0;
  for (size_t i = 0; i < eps.size(); ++i) {
    const EpisodeRecord& r = eps[i];
    const SceneConfig& s = r.scene;
    if (s.camera_index >= 0 && s.camera_index < static_cast<int>(st.camera_counts.size())) {
      ++st.camera_counts[s.camera_index];
    } else {
      cameras_in_range = false;
    }
    st.light_mean += s.light;
    if (s.texture_id >= 0 && s.texture_id < kNumTextures) ++st.texture_counts[s.texture_id];
    const double span = st.height_max - st.height_min;
    int bin = span > 0.0 ? static_cast<int>((s.table_height_delta - st.height_min) / span * kHeightBins)
                         : 0;
    ++st.height_histogram[std::clamp(bin, 0, kHeightBins - 1)];
    ++st.embodiment_counts[s.embodiment_id];
    const double len = static_cast<double>(r.length());
    st.length_min = i == 0 ? len : std::min(st.length_min, len);
    st.length_max = i == 0 ? len : std::max(st.length_max, len);
    length_sum += len;
    for (long t = 0; t < r.length(); ++t) {
      const double tn = r.actions.col(t).head<3>().norm();
      const double rn = r.actions.col(t).segment<3>(3).norm();
      translation_sum += tn;
      rotation_sum += rn;
      st.translation_max = std::max(st.translation_max, tn);
      st.rotation_max = std::max(st.rotation_max, rn);
      steps += 1.0;
    }
    st.action_roundtrip_error = std::max(st.action_roundtrip_error, action_roundtrip_error(r));
  }
  if (!eps.empty()) {
    st.light_mean /= static_cast<double>(eps.size());
    st.length_mean = length_sum / static_cast<double>(eps.size());
  }
  if (steps > 0.0) {
    st.translation_mean = translation_sum / steps;
    st.rotation_mean = rotation_sum / steps;
  }
  // successful episodes take camera poses round-robin
  const size_t n = eps.size(), slots = st.camera_counts.size();
  st.camera_balanced = cameras_in_range;
  for (size_t i = 0; i < slots && st.camera_balanced; ++i) {
    const size_t expected = slots == 1 ? n : n / slots + (i < n % slots ? 1 : 0);
    st.camera_balanced = st.camera_counts[i] == expected;
  }
  return st;
}

json to_json(const DatasetStats& s) {
  return {{"episodes", s.episodes},
          {"camera_counts", s.camera_counts},
          {"camera_balanced", s.camera_balanced},
          {"light_mean", {s.light_mean.x(), s.light_mean.y(), s.light_mean.z()}},
          {"texture_counts", s.texture_counts},
          {"height_histogram",
           {{"min", s.height_min}, {"max", s.height_max}, {"counts", s.height_histogram}}},
          {"embodiment_counts", s.embodiment_counts},
          {"episode_length",
           {{"min", s.length_min}, {"max", s.length_max}, {"mean", s.length_mean}}},
          {"action_translation", {{"mean", s.translation_mean}, {"max", s.translation_max}}},
          {"action_rotation", {{"mean", s.rotation_mean}, {"max", s.rotation_max}}},
          {"action_roundtrip_error", s.action_roundtrip_error}};
}

}  // namespace scenegen
