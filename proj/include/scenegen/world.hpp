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

#ifndef SCENEGEN_WORLD_HPP_
#define SCENEGEN_WORLD_HPP_

#include <map>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "scenegen/pose.hpp"

namespace scenegen {

using ActionVec = Eigen::Matrix<double, 7, 1>;

// End-effector command: delta pose expressed in the current end-effector
// frame (translation in meters, rotation vector in radians) and a gripper
// opening command in [0, 1] (0 closed, 1 open).
struct Action {
  static constexpr int kDim = 7;

  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();
  double gripper = 1.0;

  Pose delta() const { return {Rotation::FromAxisAngle(rotation), translation}; }
  ActionVec vector() const;
  static Action FromVector(const Eigen::Ref<const Eigen::VectorXd>& v);
  // The command that moves `from` onto `to`.
  static Action Between(const Pose& from, const Pose& to, double gripper);
};

// Proprioceptive state: end-effector pose and the scalar gripper opening.
struct EeState {
  Pose ee;
  double gripper_opening = 1.0;
};

// Full kinematic world state. Objects are keyed by id.
struct WorldState {
  std::map<std::string, Pose> objects;
  Pose ee;
  double gripper_opening = 1.0;
  std::optional<std::string> attached;
  // object pose in the end-effector frame while attached
  Pose attach_offset;
  // world z of the table surface
  double table_height = 0.0;
  std::string embodiment_id = "panda";
  int time = 0;
  // number of steps whose command exceeded the per-step limits
  int clamped_steps = 0;

  EeState ee_state() const { return {ee, gripper_opening}; }
  const Pose& object(const std::string& id) const;
};

}  // namespace scenegen

#endif  // SCENEGEN_WORLD_HPP_
