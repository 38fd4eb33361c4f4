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

#ifndef SCENEGEN_RANDOMIZE_HPP_
#define SCENEGEN_RANDOMIZE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scenegen/pose.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/task.hpp"

namespace scenegen {

inline constexpr int kNumTextures = 17;
inline constexpr double kLightMax = 0.5;

enum class Factor { camera, light, texture, height, embodiment };

// Set of enabled scene randomization factors.
class FactorSet {
 public:
  FactorSet() = default;
  static FactorSet All();
  // Comma separated factor names; "none" or "" is the empty set. Throws
  // std::invalid_argument on unknown names.
  static FactorSet Parse(std::string_view text);

  FactorSet& insert(Factor f);
  bool contains(Factor f) const { return (bits_ >> static_cast<unsigned>(f)) & 1U; }
  bool empty() const { return bits_ == 0; }
  // Canonical comma separated name, "none" when empty.
  std::string str() const;
  std::vector<Factor> factors() const;

  friend bool operator==(FactorSet, FactorSet) = default;

 private:
  unsigned bits_ = 0;
};

const char* factor_name(Factor f);
Factor parse_factor(std::string_view name);

// ---------------------------------------------------------------------------
// Camera rig

// Spherical cap around the robot base. Polar angles are measured from the
// world vertical.
struct CapParams {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  double polar_min = 20.0 * 3.14159265358979323846 / 180.0;
  double polar_max = 70.0 * 3.14159265358979323846 / 180.0;
  double azimuth_min = -120.0 * 3.14159265358979323846 / 180.0;
  double azimuth_max = 120.0 * 3.14159265358979323846 / 180.0;
  int num_poses = 100;
};

struct CameraRig {
  CapParams params;
  // camera-to-world poses; z looks at the center
  std::vector<Pose> poses;
  std::vector<double> polar;
  std::vector<double> azimuth;

  int size() const { return static_cast<int>(poses.size()); }
};

// Fibonacci lattice on the cap: azimuth from the golden-ratio Kronecker
// sequence, polar angle stratified in cos(theta) so that every band of the
// cap receives points in proportion to its area.
// Throws std::invalid_argument for 0 <= polar_min < polar_max <= pi/2,
// radius > 0 or num_poses >= 1 violations.
CameraRig fibonacci_cap(const CapParams& params);

// Round-robin camera assignment that only advances after a successful
// episode. Calls must be made in episode order.
class CameraScheduler {
 public:
  explicit CameraScheduler(int num_poses);

  int current() const { return current_; }
  // Returns the index used by the episode being reported, then advances
  // iff it succeeded.
  int next(bool episode_success);

  int num_poses() const { return num_poses_; }

 private:
  int num_poses_;
  int current_ = 0;
};

// ---------------------------------------------------------------------------
// Scalar samplers

Vec3 sample_light(Rng& rng);
int sample_texture(Rng& rng);

// Half-open [min, max).
struct HeightRange {
  double min = -0.05;
  double max = 0.05;
};
double sample_table_height(Rng& rng, const HeightRange& range);

// ---------------------------------------------------------------------------
// Embodiments

enum class GripperKind { panda_gripper, robotiq85 };

struct GripperSpec {
  GripperKind kind;
  std::string name;
  // per-joint positions at the fully closed and fully open limits
  std::vector<double> closed;
  std::vector<double> open;
};

const GripperSpec& gripper_spec(GripperKind kind);
GripperKind parse_gripper(std::string_view name);

// Normalized mean opening of the joint vector: 0 fully closed, 1 fully
// open. Throws std::invalid_argument on a length mismatch.
double map_gripper_to_scalar(GripperKind kind, std::span<const double> joints);
// Joint configuration realizing a scalar opening (every joint at the same
// fraction of its range).
std::vector<double> gripper_joints(GripperKind kind, double opening);

struct EmbodimentSpec {
  std::string id;
  GripperKind gripper = GripperKind::panda_gripper;
  Pose base_pose;
  // end-effector home relative to the base
  Pose home;
  double reach_radius = 0.85;
  Vec3 workspace_min = Vec3(0.2, -0.4, -0.1);
  Vec3 workspace_max = Vec3(0.8, 0.4, 0.6);

  Pose home_pose() const { return compose(base_pose, home); }
  // Strictly inside the workspace box and the reach sphere.
  bool reachable(const Vec3& p) const;
};

const std::vector<EmbodimentSpec>& embodiment_registry();
// Throws std::invalid_argument for unknown ids.
const EmbodimentSpec& embodiment(std::string_view id);

// True iff the task placement region at every table height in `heights`
// lies inside the embodiment's workspace box and reach.
bool compatible(const EmbodimentSpec& embodiment, const TaskSpec& task,
                const HeightRange& heights);

// ---------------------------------------------------------------------------
// Scene configuration

struct SceneConfig {
  int camera_index = 0;
  Vec3 light = Vec3::Constant(kLightMax);
  int texture_id = 0;
  double table_height_delta = 0.0;
  std::string embodiment_id = "panda";
  // planar placements: x, y on the table, yaw about z; z is assigned by
  // the world at reset
  std::map<std::string, Pose> object_placements;

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

// {"t": [x, y, z], "q": [w, x, y, z]}
nlohmann::json pose_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SceneConfig& scene);
SceneConfig scene_from_json(const nlohmann::json& j);

struct RandomizationConfig {
  FactorSet factors;
  CapParams cap;
  HeightRange height;
  std::vector<std::string> embodiments = {"panda", "ur5e", "iiwa", "kinova3", "jaco"};
  uint64_t master_seed = 0;
};

nlohmann::json to_json(const RandomizationConfig& cfg);
// Missing keys keep their defaults. Throws std::invalid_argument.
RandomizationConfig randomization_from_json(const nlohmann::json& j);

// Uniform placements in the task region honoring min_separation (rejection
// sampling). Throws std::runtime_error after 1000 rejected draws.
std::map<std::string, Pose> sample_placements(const TaskSpec& task, Rng& rng);

// Draws one scene. Disabled factors keep the canonical defaults; object
// placements are always randomized. The camera index is supplied by the
// caller (scheduler during generation, uniform draw during evaluation).
// Throws std::runtime_error when no compatible embodiment is found within
// five resamples.
SceneConfig sample_scene(const TaskSpec& task, const FactorSet& factors,
                         const RandomizationConfig& cfg, int camera_index, Rng& rng);
SceneConfig sample_scene(const TaskSpec& task, const FactorSet& factors,
                         const RandomizationConfig& cfg, const CameraScheduler& scheduler,
                         Rng& rng);

}  // namespace scenegen

#endif  // SCENEGEN_RANDOMIZE_HPP_
