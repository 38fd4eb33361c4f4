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

#ifndef SCENEGEN_EXPERT_HPP_
#define SCENEGEN_EXPERT_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "scenegen/augment.hpp"
#include "scenegen/randomize.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/simworld.hpp"
#include "scenegen/trajectory.hpp"

namespace scenegen {

// Per-demonstration variation of the scripted expert, standing in for the
// spread of human teleoperation.
struct ExpertNoise {
  double grasp_xy = 0.003;
  double place_xy = 0.003;
  double approach_min = 0.06;
  double approach_max = 0.10;
  double clearance_min = 0.04;
  double clearance_max = 0.08;
  // horizontal offset of the pre-grasp point from the grasp point
  double approach_xy = 0.03;

  static ExpertNoise None();
};

// Hand-coded pick / place / insert controller with privileged access to the
// world state. Moves with the same per-step bounds as the augmentation
// bridges: move-above, descend, close, lift, transit, descend, open, and a
// final retreat.
class ScriptedExpert {
 public:
  ScriptedExpert(const World& world, ExpertNoise noise, uint64_t seed,
                 BridgePlan limits = BridgePlan{});

  Action act(const WorldState& state);
  bool finished() const { return finished_; }

 private:
  enum class Phase { approach, descend, close, lift, transit, lower, open, retreat, done };

  // Target end-effector pose of the current motion phase.
  Pose motion_target(const WorldState& s);
  void begin_subtask(const WorldState& s);
  std::optional<Action> move_toward(const WorldState& s, const Pose& target, double gripper);

  const World* world_;
  ExpertNoise noise_;
  BridgePlan limits_;
  Rng rng_;

  size_t subtask_ = 0;
  Phase phase_ = Phase::approach;
  bool finished_ = false;
  int gripper_wait_ = 0;
  // per-subtask draws
  Vec3 offset_ = Vec3::Zero();
  double approach_height_ = 0.08;
  Vec3 approach_offset_ = Vec3::Zero();
  double clearance_ = 0.06;
  double travel_z_ = 0.0;
  std::optional<Pose> retreat_target_;
  std::optional<Pose> lift_target_;
};

// Scene with canonical factors and the given placements.
SceneConfig canonical_scene(std::map<std::string, Pose> placements);

struct SeedSet {
  std::vector<RawDemo> raw;
  std::vector<Demonstration> demos;
  std::vector<SceneConfig> scenes;
};

// Runs the scripted expert until it finishes (or max_steps) and records
// every step. Observations use camera scene.camera_index of `rig`.
RawDemo record_expert(const World& world, const SceneConfig& scene, const CameraRig& rig,
                      ScriptedExpert& expert, int max_steps, Rng& reset_rng);

// `count` segmented, successful expert demonstrations on canonical scenes
// with random placements. Throws std::runtime_error if the expert keeps
// failing.
SeedSet make_seed_demos(const World& world, const CameraRig& rig, int count, uint64_t seed,
                        ExpertNoise noise = {});

}  // namespace scenegen

#endif  // SCENEGEN_EXPERT_HPP_
