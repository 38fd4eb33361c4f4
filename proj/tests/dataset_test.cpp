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


#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "scenegen/dataset.hpp"
#include "scenegen/expert.hpp"

namespace fs = std::filesystem;
using namespace scenegen;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("scenegen_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Fixture {
  World world{builtin_task("stack")};
  CameraRig rig = fibonacci_cap({});
  SeedSet seeds = make_seed_demos(world, rig, 4, 7);
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

std::vector<EpisodeRecord> generate(int n, const FactorSet& factors, uint64_t master) {
  Fixture& f = fixture();
  RandomizationConfig cfg;
  std::vector<EpisodeRecord> out;
  for (uint64_t i = 0; static_cast<int>(out.size()) < n; ++i) {
    const uint64_t seed = generation_seed(master, i);
    Rng rng = make_rng(seed);
    const int camera = static_cast<int>(out.size()) % f.rig.size();
    SceneConfig scene = sample_scene(f.world.task(), factors, cfg, camera, rng);
    auto result = generate_episode(f.world, f.seeds.demos, scene, f.rig, rng);
    if (auto* ep = std::get_if<GeneratedEpisode>(&result)) {
      out.push_back(make_record(*ep, out.size(), seed));
    }
  }
  return out;
}

Manifest base_manifest(const FactorSet& factors) {
  Manifest m;
  m.task_id = "stack";
  m.factors = factors;
  m.master_seed = 42;
  RandomizationConfig cfg;
  cfg.factors = factors;
  m.config["randomization"] = to_json(cfg);
  return m;
}

Manifest write(const fs::path& dir, const std::vector<EpisodeRecord>& eps, const FactorSet& f) {
  DatasetWriter w(dir, base_manifest(f));
  for (const auto& e : eps) w.write_episode(e);
  return w.finish(eps.size());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

}  // namespace

TEST_CASE("dataset round trip reproduces every episode exactly") {
  TempDir tmp("roundtrip");
  const FactorSet factors = FactorSet::Parse("camera,light,texture,height");
  const auto eps = generate(10, factors, 11);
  const Manifest m = write(tmp.path, eps, factors);
  CHECK(m.episode_count == 10);
  CHECK(m.content_hash.size() == 64);

  const Dataset d = read_dataset(tmp.path);
  REQUIRE(d.episodes.size() == eps.size());
  for (size_t i = 0; i < eps.size(); ++i) CHECK(d.episodes[i] == eps[i]);
  CHECK(d.manifest.content_hash == m.content_hash);
  CHECK(read_episode(tmp.path, 7) == eps[7]);
  CHECK_THROWS_AS(read_episode(tmp.path, 10), std::out_of_range);
}

TEST_CASE("empty dataset round trips") {
  TempDir tmp("empty");
  const Manifest m = write(tmp.path, {}, FactorSet{});
  const Dataset d = read_dataset(tmp.path);
  CHECK(d.episodes.empty());
  CHECK(d.manifest.episode_count == 0);
  CHECK(d.manifest.content_hash == m.content_hash);
}

TEST_CASE("single bit flips anywhere in the episode payload are detected") {
  TempDir tmp("bitflip");
  const auto eps = generate(3, FactorSet{}, 12);
  write(tmp.path, eps, FactorSet{});
  const fs::path bin = tmp.path / "episodes.bin";
  const std::string clean = slurp(bin);
  std::mt19937_64 gen(5);
  const size_t header = std::string("scenegen-dataset/1 episodes\n").size();
  for (int trial = 0; trial < 50; ++trial) {
    std::string bad = clean;
    const size_t pos = std::uniform_int_distribution<size_t>(header, bad.size() - 1)(gen);
    bad[pos] = static_cast<char>(bad[pos] ^ (1 << (trial % 8)));
    spit(bin, bad);
    CHECK_THROWS_AS(read_dataset(tmp.path), CorruptionError);
  }
  spit(bin, clean);
  CHECK_NOTHROW(read_dataset(tmp.path));
}

TEST_CASE("index edits break the content hash") {
  TempDir tmp("index");
  const auto eps = generate(2, FactorSet{}, 13);
  write(tmp.path, eps, FactorSet{});
  const fs::path idx = tmp.path / "episodes.idx";
  std::string s = slurp(idx);
  const size_t at = s.find("\"seed\":");
  REQUIRE(at != std::string::npos);
  s.insert(at + 7, "1");
  spit(idx, s);
  CHECK_THROWS_AS(read_dataset(tmp.path), CorruptionError);
}

TEST_CASE("truncated files raise corruption errors") {
  TempDir tmp("trunc");
  const auto eps = generate(2, FactorSet{}, 14);
  write(tmp.path, eps, FactorSet{});
  const fs::path bin = tmp.path / "episodes.bin";
  const std::string clean = slurp(bin);
  for (size_t cut : {clean.size() - 1, clean.size() / 2, size_t{40}, size_t{3}}) {
    spit(bin, clean.substr(0, cut));
    CHECK_THROWS_AS(read_dataset(tmp.path), CorruptionError);
  }
  spit(bin, clean);
  const fs::path idx = tmp.path / "episodes.idx";
  const std::string index = slurp(idx);
  spit(idx, index.substr(0, index.rfind('\n', index.size() - 2) + 1));
  CHECK_THROWS_AS(read_dataset(tmp.path), CorruptionError);
}

TEST_CASE("foreign schema versions raise version errors") {
  TempDir tmp("version");
  write(tmp.path, generate(1, FactorSet{}, 15), FactorSet{});
  const fs::path manifest = tmp.path / "manifest";
  std::string s = slurp(manifest);
  const size_t at = s.find("scenegen-dataset/1");
  REQUIRE(at != std::string::npos);
  s.replace(at, 18, "scenegen-dataset/9");
  spit(manifest, s);
  CHECK_THROWS_AS(read_dataset(tmp.path), VersionError);
  CHECK_THROWS_AS(read_manifest(tmp.path), VersionError);
}

TEST_CASE("missing dataset directory is reported") {
  CHECK_THROWS(read_dataset(fs::temp_directory_path() / "scenegen_no_such_dataset"));
}

TEST_CASE("stored actions reproduce the stored states") {
  for (const auto& e : generate(5, FactorSet::Parse("height,embodiment"), 16)) {
    CHECK(action_roundtrip_error(e) <= 1e-6);
    const ReplayResult r = replay_episode(fixture().world, e);
    CHECK(r.success);
    CHECK(r.max_state_error <= 1e-6);
  }
}

TEST_CASE("state vectors round trip") {
  const auto e = generate(1, FactorSet{}, 17).front();
  for (long t = 0; t < e.states.cols(); t += 9) {
    const StateVec v = e.states.col(t);
    CHECK((state_vector(state_from_vector(v)) - v).norm() <= 1e-12);
  }
}

TEST_CASE("record validation rejects mismatched arrays") {
  EpisodeRecord r = generate(1, FactorSet{}, 18).front();
  CHECK_NOTHROW(r.validate());
  r.actions.conservativeResize(7, r.actions.cols() - 1);
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("stats report balanced camera counts and marginals") {
  const FactorSet factors = FactorSet::Parse("camera,light,texture,height");
  Dataset d;
  d.manifest = base_manifest(factors);
  d.episodes = generate(12, factors, 19);
  const DatasetStats s = dataset_stats(d);
  CHECK(s.episodes == 12);
  REQUIRE(s.camera_counts.size() == static_cast<size_t>(fixture().rig.size()));
  size_t total = 0;
  for (size_t i = 0; i < s.camera_counts.size(); ++i) {
    CHECK(s.camera_counts[i] == (i < 12 ? 1u : 0u));
    total += s.camera_counts[i];
  }
  CHECK(total == 12);
  CHECK(s.camera_balanced);
  size_t hist = 0;
  for (size_t c : s.height_histogram) hist += c;
  CHECK(hist == 12);
  CHECK(s.height_histogram.size() == static_cast<size_t>(kHeightBins));
  CHECK(s.action_roundtrip_error <= 1e-6);
  for (int c = 0; c < 3; ++c) {
    CHECK(s.light_mean[c] >= 0.0);
    CHECK(s.light_mean[c] <= kLightMax);
  }
  CHECK(s.length_min <= s.length_mean);
  CHECK(s.length_mean <= s.length_max);
}

TEST_CASE("policy episodes carry observations and actions") {
  const auto e = generate(1, FactorSet{}, 20).front();
  const PolicyEpisode p = to_policy_episode(e);
  CHECK(p.observations == e.observations);
  CHECK(p.actions == e.actions);
}
