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

#include "scenegen/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scenegen {

namespace {

// ceil() that ignores representation noise: 0.1 / 0.01 is 10.000000000000002
int steps_for(double amount, double bound) {
  return static_cast<int>(std::ceil(amount / bound - 1e-9));
}

}  // namespace

void BridgePlan::validate() const {
  if (num_steps < 1) throw std::invalid_argument("BridgePlan: num_steps must be >= 1");
  if (!(max_pos_step > 0.0) || !(max_rot_step > 0.0)) {
    throw std::invalid_argument("BridgePlan: step bounds must be positive");
  }
}

SegmentSelection parse_selection(std::string_view name) {
  if (name == "nearest") return SegmentSelection::nearest;
  if (name == "uniform") return SegmentSelection::uniform;
  throw std::invalid_argument("unknown segment selection '" + std::string(name) + "'");
}

std::vector<Pose> transform_segment(std::span<const Pose> segment, const Pose& src_object_pose,
                                    const Pose& new_object_pose) {
  if (segment.empty()) throw std::invalid_argument("transform_segment: empty segment");
  const Pose change = compose(new_object_pose, inverse(src_object_pose));
  std::vector<Pose> out;
  out.reserve(segment.size());
  for (const Pose& p : segment) out.push_back(compose(change, p));
  return out;
}

double selection_distance(const Pose& a, const Pose& b) {
  return 1.0 * translation_distance(a, b) + 0.1 * geodesic_distance(a.rotation, b.rotation);
}

const SegmentRef& select_source_segment(std::span<const SegmentRef> pool,
                                        const Pose& new_object_pose, Rng& rng,
                                        SegmentSelection mode) {
  if (pool.empty()) throw EmptyPoolError("select_source_segment: empty pool");
  if (mode == SegmentSelection::uniform) {
    return pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng)];
  }
  size_t best = 0;
  double best_distance = selection_distance(pool[0].segment().reference_object_pose, new_object_pose);
  for (size_t i = 1; i < pool.size(); ++i) {
    const double d = selection_distance(pool[i].segment().reference_object_pose, new_object_pose);
    if (d < best_distance) {
      best = i;
      best_distance = d;
    }
  }
  return pool[best];
}

std::vector<Pose> build_bridge(const Pose& from, const Pose& to, const BridgePlan& plan) {
  plan.validate();
  const int n = std::max({plan.num_steps, 1,
                          steps_for(translation_distance(from, to), plan.max_pos_step),
                          steps_for(geodesic_distance(from.rotation, to.rotation), plan.max_rot_step)});
  std::vector<Pose> out;
  out.reserve(static_cast<size_t>(n));
  for (int k = 1; k < n; ++k) out.push_back(interpolate(from, to, static_cast<double>(k) / n));
  out.push_back(to);
  return out;
}

GenerationResult generate_episode(const World& world, const std::vector<Demonstration>& seeds,
                                  const SceneConfig& scene, const CameraRig& rig, Rng& rng,
                                  const AugmentConfig& config) {
  const TaskSpec& task = world.task();
  const EmbodimentSpec& body = embodiment(scene.embodiment_id);

  GeneratedEpisode ep;
  WorldState s = world.reset(scene, rng);
  ep.scene = scene;
  for (const auto& [id, pose] : s.objects) {
    ep.scene.object_placements[id] = {pose.rotation, Vec3(pose.translation.x(), pose.translation.y(), 0.0)};
  }
  ep.demo.embodiment_id = body.id;
  ep.demo.source = DemoSource::generated;

  double hold = s.gripper_opening;
  const auto execute = [&](const Pose& target, double gripper) {
    ep.demo.timesteps.push_back({s.ee_state(), world.observe(s, ep.scene, rig),
                                 Action::Between(s.ee, target, gripper)});
    ep.worlds.push_back(s);
    s = world.step(s, ep.demo.timesteps.back().action);
    hold = gripper;
  };

  for (size_t i = 0; i < task.subtasks.size(); ++i) {
    const SubtaskSpec& sub = task.subtasks[i];
    const size_t start = ep.demo.timesteps.size();
    const Pose object_pose = s.object(sub.reference_object());

    const std::vector<SegmentRef> pool = segment_pool(seeds, sub.id);
    const SegmentRef& source = select_source_segment(pool, object_pose, rng, config.selection);
    const SubtaskSegment& seg = source.segment();
    const std::vector<Pose> poses =
        transform_segment(source.demo->segment_poses(seg), seg.reference_object_pose, object_pose);
    const std::vector<double> gripper = source.demo->segment_gripper(seg);

    const std::vector<Pose> bridge = build_bridge(s.ee, poses.front(), config.bridge);
    for (const Pose& p : poses) {
      if (!body.reachable(p.translation)) {
        return GenerationFailure{i, "segment target outside the reach of " + body.id};
      }
    }
    for (const Pose& p : bridge) execute(p, hold);
    for (size_t k = 1; k < poses.size(); ++k) execute(poses[k], gripper[k - 1]);

    ep.demo.segments.push_back({start, ep.demo.timesteps.size(), sub.id, sub.reference_object(),
                                object_pose});
    if (!world.check_subtask(i, s)) {
      return GenerationFailure{i, "subtask '" + sub.id + "' not achieved"};
    }
  }
  ep.worlds.push_back(s);
  ep.demo.final_state = s.ee_state();
  if (!world.check_success(s)) {
    return GenerationFailure{task.subtasks.size() - 1, "task success predicate not satisfied"};
  }
  return ep;
}

void reobserve(const World& world, GeneratedEpisode& episode, const CameraRig& rig,
               int camera_index) {
  episode.scene.camera_index = camera_index;
  for (size_t t = 0; t < episode.demo.timesteps.size(); ++t) {
    episode.demo.timesteps[t].observation = world.observe(episode.worlds[t], episode.scene, rig);
  }
}

}  // namespace scenegen
