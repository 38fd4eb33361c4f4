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

#ifndef SCENEGEN_SIMWORLD_HPP_
#define SCENEGEN_SIMWORLD_HPP_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenegen/randomize.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/task.hpp"
#include "scenegen/trajectory.hpp"
#include "scenegen/world.hpp"

namespace scenegen {

using Observation = Eigen::VectorXd;

// Offsets into the observation vector. Poses are expressed in the camera
// frame: position (3) followed by the first two rotation-matrix columns (6).
struct ObservationLayout {
  static constexpr int kEePosition = 0;
  static constexpr int kEeRotation = 3;
  static constexpr int kGripper = 9;
  static constexpr int kFirstObject = 10;
  static constexpr int kPoseWidth = 9;

  int num_objects = 0;

  int object(int i) const { return kFirstObject + kPoseWidth * i; }
  int light() const { return object(num_objects); }
  int texture() const { return light() + 3; }
  int height() const { return texture() + kNumTextures; }
  int size() const { return height() + 1; }
};

// Quasi-static kinematic tabletop world for one task. Stateless: every
// operation maps an input state to a new one.
class World {
 public:
  explicit World(TaskSpec task);

  const TaskSpec& task() const { return task_; }
  const ObservationLayout& layout() const { return layout_; }
  int observation_dim() const { return layout_.size(); }

  // Objects at the scene placements resting on the table (shifted by the
  // height delta), end effector at the embodiment home, gripper open.
  // Placements outside the region throw std::invalid_argument; overlapping
  // placements are redrawn from `rng` up to 20 times, then
  // std::runtime_error.
  WorldState reset(const SceneConfig& scene, Rng& rng) const;

  // One control step: clamp the command, move the end effector, servo the
  // gripper, update grasp attachment and settle released objects.
  WorldState step(const WorldState& state, const Action& action) const;

  Observation observe(const WorldState& state, const SceneConfig& scene,
                      const CameraRig& rig) const;

  bool check_success(const WorldState& state) const;
  bool check_subtask(size_t subtask_index, const WorldState& state) const;
  std::vector<SubtaskSignal> subtask_signals() const;

  Vec3 grasp_point(const WorldState& state, const std::string& object_id) const;
  // `object` rests on top of `support` (footprint + contact height), and
  // neither is held.
  bool resting_on(const WorldState& state, const std::string& object,
                  const std::string& support) const;
  // Ring axis within the inner radius of the post axis, ring below the
  // post top, ring not held.
  bool inserted(const WorldState& state, const std::string& ring, const std::string& post) const;

 private:
  double settle_height(const WorldState& state, const std::string& released) const;

  TaskSpec task_;
  ObservationLayout layout_;
};

}  // namespace scenegen

#endif  // SCENEGEN_SIMWORLD_HPP_
