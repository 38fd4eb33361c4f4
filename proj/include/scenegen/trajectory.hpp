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

#ifndef SCENEGEN_TRAJECTORY_HPP_
#define SCENEGEN_TRAJECTORY_HPP_

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenegen/pose.hpp"
#include "scenegen/world.hpp"

namespace scenegen {

struct Timestep {
  EeState state;
  Eigen::VectorXd observation;
  Action action;
};

// Half-open [start, end) slice of a demonstration solving one subtask.
struct SubtaskSegment {
  size_t start = 0;
  size_t end = 0;
  std::string subtask_id;
  std::string reference_object_id;
  // reference object pose (world frame) at timestep `start`
  Pose reference_object_pose;

  size_t size() const { return end - start; }
};

enum class DemoSource { human_seed, generated };

struct Demonstration {
  std::vector<Timestep> timesteps;
  // state reached after the last action
  EeState final_state;
  std::vector<SubtaskSegment> segments;
  std::string embodiment_id = "panda";
  DemoSource source = DemoSource::human_seed;

  size_t size() const { return timesteps.size(); }
  // End-effector state at index i in [0, size()]; size() is the final state.
  const EeState& state_at(size_t i) const;
  // Controller target poses of a segment: the end-effector poses at
  // indices start..end inclusive (size() + 1 poses).
  std::vector<Pose> segment_poses(const SubtaskSegment& seg) const;
  // Gripper commands of the segment's actions (size() values).
  std::vector<double> segment_gripper(const SubtaskSegment& seg) const;
};

// Rule-based subtask termination signal: a pure predicate on world state.
struct SubtaskSignal {
  std::string subtask_id;
  std::string reference_object_id;
  std::function<bool(const WorldState&)> done;
};

// Unsegmented recording. `worlds` holds the world state before every
// action plus the final state (timesteps.size() + 1 entries).
struct RawDemo {
  std::vector<Timestep> timesteps;
  std::vector<WorldState> worlds;
  std::string embodiment_id = "panda";
  DemoSource source = DemoSource::human_seed;
};

class SegmentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyPoolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Boundary k is the first state index, after boundary k-1, at which signal
// k holds; the last segment always extends to the end of the recording.
// Throws SegmentationError if a signal never fires, std::invalid_argument
// for an empty or inconsistent recording.
Demonstration segment_demonstration(const RawDemo& raw, const std::vector<SubtaskSignal>& signals);

// A pooled segment with a back-reference to its source demonstration.
struct SegmentRef {
  const Demonstration* demo = nullptr;
  size_t demo_index = 0;
  size_t segment_index = 0;

  const SubtaskSegment& segment() const { return demo->segments[segment_index]; }
};

// All segments labelled `subtask_id`, in demonstration order. The
// references stay valid while `demos` is alive and unmodified. Throws
// EmptyPoolError when nothing matches.
std::vector<SegmentRef> segment_pool(const std::vector<Demonstration>& demos,
                                     const std::string& subtask_id);

}  // namespace scenegen

#endif  // SCENEGEN_TRAJECTORY_HPP_
