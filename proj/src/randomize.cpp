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

#include "scenegen/randomize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace scenegen {

namespace {

constexpr std::array<Factor, 5> kAllFactors = {Factor::camera, Factor::light, Factor::texture,
                                               Factor::height, Factor::embodiment};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

EmbodimentSpec make_embodiment(std::string id, GripperKind gripper, Vec3 base, Vec3 home,
                               double reach) {
  EmbodimentSpec e;
  e.id = std::move(id);
  e.gripper = gripper;
  e.base_pose = Pose::FromTranslation(base);
  // tool z axis pointing down
  e.home = {Rotation::AboutX(std::numbers::pi), home};
  e.reach_radius = reach;
  e.workspace_min = Vec3(0.15, -0.45, -0.12);
  e.workspace_max = Vec3(0.85, 0.45, 0.60);
  return e;
}

}  // namespace

Pose pose_from_json(const nlohmann::json& j) {
  const auto& t = j.at("t");
  const auto& q = j.at("q");
  return {Rotation::FromStored({q.at(0).get<double>(), q.at(1).get<double>(),
                               q.at(2).get<double>(), q.at(3).get<double>()}),
          Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>())};
}

nlohmann::json pose_json(const Pose& p) {
  const auto& q = p.rotation.wxyz();
  return {{"t", {p.translation.x(), p.translation.y(), p.translation.z()}},
          {"q", {q[0], q[1], q[2], q[3]}}};
}

// ---------------------------------------------------------------------------

FactorSet FactorSet::All() {
  FactorSet s;
  for (Factor f : kAllFactors) s.insert(f);
  return s;
}

FactorSet FactorSet::Parse(std::string_view text) {
  FactorSet s;
  const std::string all = trim(text);
  if (all.empty() || all == "none") return s;
  if (all == "all") return All();
  std::stringstream ss(all);
  std::string item;
  while (std::getline(ss, item, ',')) {
    s.insert(parse_factor(trim(item)));
  }
  return s;
}

FactorSet& FactorSet::insert(Factor f) {
  bits_ |= 1U << static_cast<unsigned>(f);
  return *this;
}

std::string FactorSet::str() const {
  if (empty()) return "none";
  std::string out;
  for (Factor f : factors()) {
    if (!out.empty()) out += ',';
    out += factor_name(f);
  }
  return out;
}

std::vector<Factor> FactorSet::factors() const {
  std::vector<Factor> out;
  for (Factor f : kAllFactors) {
    if (contains(f)) out.push_back(f);
  }
  return out;
}

const char* factor_name(Factor f) {
  switch (f) {
    case Factor::camera: return "camera";
    case Factor::light: return "light";
    case Factor::texture: return "texture";
    case Factor::height: return "height";
    case Factor::embodiment: return "embodiment";
  }
  return "?";
}

Factor parse_factor(std::string_view name) {
  for (Factor f : kAllFactors) {
    if (name == factor_name(f)) return f;
  }
  throw std::invalid_argument("unknown randomization factor '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

CameraRig fibonacci_cap(const CapParams& p) {
  const double half_pi = 0.5 * std::numbers::pi;
  if (!(p.polar_min >= 0.0 && p.polar_min < p.polar_max && p.polar_max <= half_pi)) {
    throw std::invalid_argument("fibonacci_cap: need 0 <= polar_min < polar_max <= pi/2");
  }
  if (!(p.azimuth_min <= p.azimuth_max)) {
    throw std::invalid_argument("fibonacci_cap: azimuth_min > azimuth_max");
  }
  if (!(p.radius > 0.0)) throw std::invalid_argument("fibonacci_cap: radius must be positive");
  if (p.num_poses < 1) throw std::invalid_argument("fibonacci_cap: num_poses must be >= 1");

  const double golden_conjugate = (std::sqrt(5.0) - 1.0) / 2.0;
  const double cos_min = std::cos(p.polar_min);
  const double cos_max = std::cos(p.polar_max);
  const int n = p.num_poses;

  CameraRig rig;
  rig.params = p;
  rig.poses.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double frac = std::fmod(k * golden_conjugate, 1.0);
    const double azimuth = p.azimuth_min + frac * (p.azimuth_max - p.azimuth_min);
    const double s = (k + 0.5) / n;
    const double polar =
        std::clamp(std::acos(cos_min + (cos_max - cos_min) * s), p.polar_min, p.polar_max);
    const Vec3 dir(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                   std::cos(polar));
    const Vec3 eye = p.center + p.radius * dir;
    // straight overhead has no defined "up"; fall back to world x
    const Vec3 up = std::sin(polar) < 1e-9 ? Vec3::UnitX() : Vec3::UnitZ();
    rig.poses.push_back({look_at(eye, p.center, up), eye});
    rig.polar.push_back(polar);
    rig.azimuth.push_back(azimuth);
  }
  return rig;
}

CameraScheduler::CameraScheduler(int num_poses) : num_poses_(num_poses) {
  if (num_poses < 1) throw std::invalid_argument("CameraScheduler: num_poses must be >= 1");
}

int CameraScheduler::next(bool episode_success) {
  const int used = current_;
  if (episode_success) current_ = (current_ + 1) % num_poses_;
  return used;
}

// ---------------------------------------------------------------------------

Vec3 sample_light(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, kLightMax);
  const double r = d(rng);
  const double g = d(rng);
  const double b = d(rng);
  return {r, g, b};
}

int sample_texture(Rng& rng) { return std::uniform_int_distribution<int>(0, kNumTextures - 1)(rng); }

double sample_table_height(Rng& rng, const HeightRange& range) {
  if (!(range.min <= range.max)) throw std::invalid_argument("table height: min > max");
  if (range.min == range.max) return range.min;
  return std::uniform_real_distribution<double>(range.min, range.max)(rng);
}

// ---------------------------------------------------------------------------

const GripperSpec& gripper_spec(GripperKind kind) {
  static const GripperSpec panda{GripperKind::panda_gripper, "panda_gripper", {0.0, 0.0},
                                 {0.04, 0.04}};
  static const GripperSpec robotiq{GripperKind::robotiq85,
                                   "robotiq85",
                                   {0.8, 0.8, -0.8, 0.8, 0.8, -0.8},
                                   {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
  return kind == GripperKind::panda_gripper ? panda : robotiq;
}

GripperKind parse_gripper(std::string_view name) {
  if (name == "panda_gripper") return GripperKind::panda_gripper;
  if (name == "robotiq85") return GripperKind::robotiq85;
  throw std::invalid_argument("unknown gripper '" + std::string(name) + "'");
}

double map_gripper_to_scalar(GripperKind kind, std::span<const double> joints) {
  const GripperSpec& g = gripper_spec(kind);
  if (joints.size() != g.closed.size()) {
    throw std::invalid_argument(g.name + ": expected " + std::to_string(g.closed.size()) +
                                " joints, got " + std::to_string(joints.size()));
  }
  double sum = 0.0;
  for (size_t i = 0; i < joints.size(); ++i) {
    sum += (joints[i] - g.closed[i]) / (g.open[i] - g.closed[i]);
  }
  return std::clamp(sum / static_cast<double>(joints.size()), 0.0, 1.0);
}

std::vector<double> gripper_joints(GripperKind kind, double opening) {
  const GripperSpec& g = gripper_spec(kind);
  std::vector<double> q(g.closed.size());
  for (size_t i = 0; i < q.size(); ++i) q[i] = g.closed[i] + opening * (g.open[i] - g.closed[i]);
  return q;
}

bool EmbodimentSpec::reachable(const Vec3& p) const {
  if ((p.array() <= workspace_min.array()).any() || (p.array() >= workspace_max.array()).any()) {
    return false;
  }
  return (p - base_pose.translation).norm() < reach_radius;
}

const std::vector<EmbodimentSpec>& embodiment_registry() {
  static const std::vector<EmbodimentSpec> registry = {
      make_embodiment("panda", GripperKind::panda_gripper, {0.0, 0.0, 0.0}, {0.40, 0.0, 0.25},
                      0.855),
      make_embodiment("ur5e", GripperKind::robotiq85, {-0.02, 0.0, 0.0}, {0.42, 0.02, 0.27},
                      0.85),
      make_embodiment("iiwa", GripperKind::robotiq85, {-0.03, 0.0, 0.0}, {0.43, 0.0, 0.24}, 0.80),
      make_embodiment("kinova3", GripperKind::robotiq85, {0.0, 0.02, 0.0}, {0.38, -0.02, 0.26},
                      0.90),
      make_embodiment("jaco", GripperKind::robotiq85, {0.02, 0.0, 0.0}, {0.37, 0.0, 0.23}, 0.90),
  };
  return registry;
}

const EmbodimentSpec& embodiment(std::string_view id) {
  for (const auto& e : embodiment_registry()) {
    if (e.id == id) return e;
  }
  throw std::invalid_argument("unknown embodiment '" + std::string(id) + "'");
}

bool compatible(const EmbodimentSpec& e, const TaskSpec& task, const HeightRange& heights) {
  if (!(e.reach_radius > 0.0) || (e.workspace_min.array() >= e.workspace_max.array()).any()) {
    return false;
  }
  const auto& r = task.region;
  for (double z : {task.table_height + heights.min, task.table_height + heights.max}) {
    for (double x : {r.x_min, r.x_max}) {
      for (double y : {r.y_min, r.y_max}) {
        if (!e.reachable(Vec3(x, y, z))) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const SceneConfig& s) {
  nlohmann::json placements = nlohmann::json::object();
  for (const auto& [id, p] : s.object_placements) placements[id] = pose_json(p);
  return {{"camera_index", s.camera_index},
          {"light_rgb", {s.light.x(), s.light.y(), s.light.z()}},
          {"texture_id", s.texture_id},
          {"table_height_delta", s.table_height_delta},
          {"embodiment_id", s.embodiment_id},
          {"object_placements", placements}};
}

SceneConfig scene_from_json(const nlohmann::json& j) {
  SceneConfig s;
  s.camera_index = j.at("camera_index").get<int>();
  const auto& l = j.at("light_rgb");
  s.light = Vec3(l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<double>());
  s.texture_id = j.at("texture_id").get<int>();
  s.table_height_delta = j.at("table_height_delta").get<double>();
  s.embodiment_id = j.at("embodiment_id").get<std::string>();
  for (const auto& [id, p] : j.at("object_placements").items()) {
    s.object_placements[id] = pose_from_json(p);
  }
  return s;
}

nlohmann::json to_json(const RandomizationConfig& c) {
  const double deg = 180.0 / std::numbers::pi;
  return {{"factors", c.factors.str()},
          {"master_seed", c.master_seed},
          {"camera",
           {{"center", {c.cap.center.x(), c.cap.center.y(), c.cap.center.z()}},
            {"radius", c.cap.radius},
            {"polar_deg", {c.cap.polar_min * deg, c.cap.polar_max * deg}},
            {"azimuth_deg", {c.cap.azimuth_min * deg, c.cap.azimuth_max * deg}},
            {"num_poses", c.cap.num_poses}}},
          {"table_height", {c.height.min, c.height.max}},
          {"embodiments", c.embodiments}};
}

RandomizationConfig randomization_from_json(const nlohmann::json& j) {
  const double rad = std::numbers::pi / 180.0;
  RandomizationConfig c;
  try {
    if (j.contains("factors")) c.factors = FactorSet::Parse(j["factors"].get<std::string>());
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("camera")) {
      const auto& jc = j["camera"];
      if (jc.contains("center")) {
        const auto& v = jc["center"];
        c.cap.center = Vec3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
      }
      c.cap.radius = jc.value("radius", c.cap.radius);
      if (jc.contains("polar_deg")) {
        c.cap.polar_min = jc["polar_deg"].at(0).get<double>() * rad;
        c.cap.polar_max = jc["polar_deg"].at(1).get<double>() * rad;
      }
      if (jc.contains("azimuth_deg")) {
        c.cap.azimuth_min = jc["azimuth_deg"].at(0).get<double>() * rad;
        c.cap.azimuth_max = jc["azimuth_deg"].at(1).get<double>() * rad;
      }
      c.cap.num_poses = jc.value("num_poses", c.cap.num_poses);
    }
    if (j.contains("table_height")) {
      c.height.min = j["table_height"].at(0).get<double>();
      c.height.max = j["table_height"].at(1).get<double>();
    }
    if (j.contains("embodiments")) {
      c.embodiments = j["embodiments"].get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("randomization config: ") + e.what());
  }
  if (c.embodiments.empty()) throw std::invalid_argument("randomization config: no embodiments");
  for (const auto& id : c.embodiments) embodiment(id);
  if (!(c.height.min <= c.height.max)) {
    throw std::invalid_argument("randomization config: table_height min > max");
  }
  return c;
}

std::map<std::string, Pose> sample_placements(const TaskSpec& task, Rng& rng) {
  const auto& r = task.region;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::pair<std::string, Pose>> placed;
    bool ok = true;
    for (const auto& o : task.objects) {
      const double x = uniform(rng, r.x_min, r.x_max);
      const double y = uniform(rng, r.y_min, r.y_max);
      const double yaw = r.yaw_min == r.yaw_max ? r.yaw_min : uniform(rng, r.yaw_min, r.yaw_max);
      const Vec3 t(x, y, 0.0);
      for (const auto& [id, p] : placed) {
        if ((p.translation - t).norm() < r.min_separation) ok = false;
      }
      placed.emplace_back(o.id, Pose{Rotation::AboutZ(yaw), t});
    }
    if (ok) return {placed.begin(), placed.end()};
  }
  throw std::runtime_error("sample_placements: region too small for min_separation");
}

SceneConfig sample_scene(const TaskSpec& task, const FactorSet& factors,
                         const RandomizationConfig& cfg, int camera_index, Rng& rng) {
  // Every draw happens regardless of the enabled factors so that two
  // regimes with the same seed share object placements.
  SceneConfig s;
  s.object_placements = sample_placements(task, rng);
  const Vec3 light = sample_light(rng);
  const int texture = sample_texture(rng);
  const double height = sample_table_height(rng, cfg.height);
  const auto pick_embodiment = [&] {
    const auto i = std::uniform_int_distribution<size_t>(0, cfg.embodiments.size() - 1)(rng);
    return cfg.embodiments[i];
  };
  std::string body = pick_embodiment();

  if (factors.contains(Factor::camera)) s.camera_index = camera_index;
  if (factors.contains(Factor::light)) s.light = light;
  if (factors.contains(Factor::texture)) s.texture_id = texture;
  if (factors.contains(Factor::height)) s.table_height_delta = height;
  if (factors.contains(Factor::embodiment)) {
    const HeightRange heights =
        factors.contains(Factor::height) ? cfg.height : HeightRange{0.0, 0.0};
    for (int resamples = 0; !compatible(embodiment(body), task, heights); ++resamples) {
      if (resamples == 5) {
        throw std::runtime_error("sample_scene: no compatible embodiment for task '" + task.id +
                                 "' after 5 resamples");
      }
      body = pick_embodiment();
    }
    s.embodiment_id = body;
  }
  return s;
}

SceneConfig sample_scene(const TaskSpec& task, const FactorSet& factors,
                         const RandomizationConfig& cfg, const CameraScheduler& scheduler,
                         Rng& rng) {
  return sample_scene(task, factors, cfg, scheduler.current(), rng);
}

}  // namespace scenegen
