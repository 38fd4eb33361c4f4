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

#include "scenegen/trajectory.hpp"

namespace scenegen {

const EeState& Demonstration::state_at(size_t i) const {
  if (i < timesteps.size()) return timesteps[i].state;
  if (i == timesteps.size()) return final_state;
  throw std::out_of_range("Demonstration::state_at: index past the final state");
}

std::vector<Pose> Demonstration::segment_poses(const SubtaskSegment& seg) const {
  std::vector<Pose> poses;
  poses.reserve(seg.size() + 1);
  for (size_t i = seg.start; i <= seg.end; ++i) poses.push_back(state_at(i).ee);
  return poses;
}

std::vector<double> Demonstration::segment_gripper(const SubtaskSegment& seg) const {
  std::vector<double> g;
  g.reserve(seg.size());
  for (size_t i = seg.start; i < seg.end; ++i) g.push_back(timesteps.at(i).action.gripper);
  return g;
}

Demonstration segment_demonstration(const RawDemo& raw, const std::vector<SubtaskSignal>& signals) {
  if (raw.timesteps.empty()) throw std::invalid_argument("segment_demonstration: empty demo");
  if (raw.worlds.size() != raw.timesteps.size() + 1) {
    throw std::invalid_argument("segment_demonstration: need one world state per step plus final");
  }
  if (signals.empty()) throw std::invalid_argument("segment_demonstration: no signals");

  const size_t len = raw.timesteps.size();
  Demonstration demo;
  demo.timesteps = raw.timesteps;
  demo.final_state = raw.worlds.back().ee_state();
  demo.embodiment_id = raw.embodiment_id;
  demo.source = raw.source;

  size_t start = 0;
  for (size_t k = 0; k < signals.size(); ++k) {
    const SubtaskSignal& signal = signals[k];
    size_t fired = 0;
    for (size_t t = start + 1; t <= len; ++t) {
      if (signal.done(raw.worlds[t])) {
        fired = t;
        break;
      }
    }
    if (fired == 0) {
      throw SegmentationError("subtask '" + signal.subtask_id + "' never terminates after step " +
                              std::to_string(start));
    }
    const size_t end = k + 1 == signals.size() ? len : fired;
    if (k + 1 < signals.size() && end == len) {
      throw SegmentationError("subtask '" + signal.subtask_id +
                              "' terminates at the last state; no room for the next subtask");
    }
    demo.segments.push_back({start, end, signal.subtask_id, signal.reference_object_id,
                             raw.worlds[start].object(signal.reference_object_id)});
    start = end;
  }
  return demo;
}

std::vector<SegmentRef> segment_pool(const std::vector<Demonstration>& demos,
                                     const std::string& subtask_id) {
  std::vector<SegmentRef> pool;
  for (size_t d = 0; d < demos.size(); ++d) {
    for (size_t s = 0; s < demos[d].segments.size(); ++s) {
      if (demos[d].segments[s].subtask_id == subtask_id) pool.push_back({&demos[d], d, s});
    }
  }
  if (pool.empty()) throw EmptyPoolError("no segments for subtask '" + subtask_id + "'");
  return pool;
}

}  // namespace scenegen
