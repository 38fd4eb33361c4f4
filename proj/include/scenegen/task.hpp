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

#ifndef SCENEGEN_TASK_HPP_
#define SCENEGEN_TASK_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scenegen/pose.hpp"

namespace scenegen {

enum class Shape { box, ring, post };

// Object geometry. Boxes use half_extents; rings use inner/outer radius and
// half_height; posts use radius and height (centered at mid height).
struct ObjectSpec {
  std::string id;
  Shape shape = Shape::box;
  Vec3 half_extents = Vec3::Constant(0.02);
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double half_height = 0.0;
  double radius = 0.0;
  double height = 0.0;
  // grasp point in the object frame
  Vec3 grasp_offset = Vec3::Zero();
  bool graspable = true;

  // center height above the surface the object rests on
  double rest_height() const;
  // distance from the center up to the top face
  double top_height() const;
};

// Object placements are sampled uniformly in x, y, yaw, with a minimum
// pairwise center distance.
struct PlacementRegion {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double yaw_min = 0.0, yaw_max = 0.0;
  double min_separation = 0.0;

  bool contains(double x, double y, double yaw) const;
};

enum class SubtaskKind { grasp, place_on, insert };

struct SubtaskSpec {
  std::string id;
  SubtaskKind kind = SubtaskKind::grasp;
  // manipulated object
  std::string object;
  // support / receptacle for place_on and insert
  std::string target;

  // frame the subtask is defined in: the object for grasps, the target
  // otherwise
  const std::string& reference_object() const {
    return kind == SubtaskKind::grasp ? object : target;
  }
};

// Gripper and contact thresholds of the kinematic world.
struct ContactParams {
  // attach when the grasp point is within this distance of the tool point
  double grasp_distance = 0.01;
  // attach fires when the opening crosses below this value
  double close_threshold = 0.1;
  // detach fires when the opening crosses above this value
  double release_threshold = 0.5;
  // maximum opening change per step
  double gripper_rate = 0.2;
  // per-step command limits (larger commands are scaled down)
  double max_translation = 0.05;
  double max_rotation = 0.2;
};

struct TaskSpec {
  std::string id;
  std::vector<ObjectSpec> objects;
  PlacementRegion region;
  std::vector<SubtaskSpec> subtasks;
  ContactParams contact;
  // world z of the table surface before any height offset
  double table_height = 0.0;

  const ObjectSpec& object(std::string_view id) const;
  int object_index(std::string_view id) const;
};

const std::vector<std::string>& builtin_task_ids();
// Throws std::invalid_argument for unknown ids.
TaskSpec builtin_task(std::string_view id);

nlohmann::json to_json(const TaskSpec& task);
// Throws std::invalid_argument on malformed definitions.
TaskSpec task_from_json(const nlohmann::json& j);

}  // namespace scenegen

#endif  // SCENEGEN_TASK_HPP_
