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

#ifndef SCENEGEN_AUGMENT_HPP_
#define SCENEGEN_AUGMENT_HPP_

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scenegen/pose.hpp"
#include "scenegen/randomize.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/simworld.hpp"
#include "scenegen/trajectory.hpp"

namespace scenegen {

// Step bounds of the interpolation segment prepended to every transformed
// subtask segment. num_steps is a lower bound on the bridge length.
struct BridgePlan {
  int num_steps = 1;
  double max_pos_step = 0.01;
  double max_rot_step = 0.05;

  // Throws std::invalid_argument unless num_steps >= 1 and both bounds > 0.
  void validate() const;
};

enum class SegmentSelection { nearest, uniform };

SegmentSelection parse_selection(std::string_view name);

struct AugmentConfig {
  BridgePlan bridge;
  SegmentSelection selection = SegmentSelection::nearest;
};

// Re-anchors a controller-target sequence recorded relative to an object at
// `src_object_pose` onto the same object at `new_object_pose`:
//   out_t = new_object_pose * src_object_pose^-1 * in_t.
std::vector<Pose> transform_segment(std::span<const Pose> segment, const Pose& src_object_pose,
                                    const Pose& new_object_pose);

// Pose distance used for source selection: meters + 0.1 * radians.
double selection_distance(const Pose& a, const Pose& b);

// nearest: argmin of selection_distance between the segment's reference
// object pose and the query (lowest pool index on ties); uniform: a uniform
// draw from `rng`. Throws EmptyPoolError on an empty pool.
const SegmentRef& select_source_segment(std::span<const SegmentRef> pool,
                                        const Pose& new_object_pose, Rng& rng,
                                        SegmentSelection mode = SegmentSelection::nearest);

// interpolate(from, to, k / n) for k = 1..n with the smallest n >= num_steps
// keeping every step within both bounds. The last pose is `to` exactly.
std::vector<Pose> build_bridge(const Pose& from, const Pose& to, const BridgePlan& plan);

struct GenerationFailure {
  size_t subtask_index = 0;
  std::string reason;
};

struct GeneratedEpisode {
  Demonstration demo;
  // world state before every step plus the final one
  std::vector<WorldState> worlds;
  // placements actually used by the world (after any reset redraw)
  SceneConfig scene;
};

using GenerationResult = std::variant<GeneratedEpisode, GenerationFailure>;

// Full trajectory augmentation for one scene: for every subtask read the
// reference object pose, select and transform a source segment, bridge to
// it from the current end effector and execute everything in the world.
// Observations use scene.camera_index on `rig`. Returns the demonstration
// only if the task succeeds; otherwise the failing subtask.
GenerationResult generate_episode(const World& world, const std::vector<Demonstration>& seeds,
                                  const SceneConfig& scene, const CameraRig& rig, Rng& rng,
                                  const AugmentConfig& config = {});

// Recomputes every observation of a generated episode for a different
// camera index (the trajectory does not depend on the camera).
void reobserve(const World& world, GeneratedEpisode& episode, const CameraRig& rig,
               int camera_index);

}  // namespace scenegen

#endif  // SCENEGEN_AUGMENT_HPP_
