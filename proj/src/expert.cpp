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

#include "scenegen/expert.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "scenegen/tolerances.hpp"

namespace scenegen {

namespace {

constexpr double kPi = std::numbers::pi;
// release height above the support surface
constexpr double kPlaceDrop = 0.002;
constexpr double kInsertDrop = 0.005;
constexpr double kRetreat = 0.05;
constexpr int kGripperPatience = 15;

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

bool reached(const Pose& a, const Pose& b) {
  return translation_distance(a, b) <= tol::kAlgebra &&
         geodesic_distance(a.rotation, b.rotation) <= tol::kAlgebra;
}

// Gripper yaw for a top-down grasp: boxes are symmetric under quarter
// turns, so pick the equivalent yaw closest to the current heading.
double grasp_yaw(const ObjectSpec& object, double object_yaw, double current_yaw) {
  if (object.shape != Shape::box) return object_yaw;
  double best = object_yaw;
  for (int k = -2; k <= 2; ++k) {
    const double candidate = object_yaw + k * kPi / 2.0;
    if (std::abs(wrap_angle(candidate - current_yaw)) < std::abs(wrap_angle(best - current_yaw))) {
      best = candidate;
    }
  }
  return wrap_angle(best);
}

}  // namespace

ExpertNoise ExpertNoise::None() {
  return {0.0, 0.0, 0.08, 0.08, 0.06, 0.06, 0.0};
}

ScriptedExpert::ScriptedExpert(const World& world, ExpertNoise noise, uint64_t seed,
                               BridgePlan limits)
    : world_(&world), noise_(noise), limits_(limits), rng_(make_rng(seed)) {
  limits_.validate();
  subtask_ = 0;
  finished_ = false;
  phase_ = Phase::done;
}

void ScriptedExpert::begin_subtask(const WorldState& s) {
  const auto& subtasks = world_->task().subtasks;
  lift_target_.reset();
  if (subtask_ >= subtasks.size()) {
    phase_ = Phase::retreat;
    retreat_target_ = Pose{s.ee.rotation, s.ee.translation + Vec3(0.0, 0.0, kRetreat)};
    return;
  }
  const SubtaskSpec& sub = subtasks[subtask_];
  const double xy = sub.kind == SubtaskKind::grasp ? noise_.grasp_xy : noise_.place_xy;
  offset_ = Vec3(xy > 0 ? uniform(rng_, -xy, xy) : 0.0, xy > 0 ? uniform(rng_, -xy, xy) : 0.0, 0.0);
  approach_height_ = noise_.approach_min < noise_.approach_max
                         ? uniform(rng_, noise_.approach_min, noise_.approach_max)
                         : noise_.approach_min;
  const double a = noise_.approach_xy;
  approach_offset_ =
      Vec3(a > 0 ? uniform(rng_, -a, a) : 0.0, a > 0 ? uniform(rng_, -a, a) : 0.0, approach_height_);
  clearance_ = noise_.clearance_min < noise_.clearance_max
                   ? uniform(rng_, noise_.clearance_min, noise_.clearance_max)
                   : noise_.clearance_min;
  gripper_wait_ = 0;
  phase_ = sub.kind == SubtaskKind::grasp ? Phase::approach : Phase::lift;
}

Pose ScriptedExpert::motion_target(const WorldState& s) {
  if (phase_ == Phase::retreat) return *retreat_target_;
  const TaskSpec& task = world_->task();
  const SubtaskSpec& sub = task.subtasks[subtask_];
  const ObjectSpec& object = task.object(sub.object);

  if (sub.kind == SubtaskKind::grasp) {
    const double yaw =
        grasp_yaw(object, yaw_of(s.object(sub.object).rotation), yaw_of(s.ee.rotation));
    const Rotation down = Rotation::AboutZ(yaw) * Rotation::AboutX(kPi);
    const Vec3 grasp = world_->grasp_point(s, sub.object) + offset_;
    if (phase_ == Phase::approach) return {down, grasp + approach_offset_};
    return {down, grasp};
  }

  // place / insert: plan the held object's pose, then map it to the tool
  const ObjectSpec& target = task.object(sub.target);
  const Pose& held = s.object(sub.object);
  const Pose& support = s.object(sub.target);
  const double top = support.translation.z() + target.top_height() + object.rest_height();
  const double travel = top + clearance_;
  Vec3 goal;
  if (phase_ == Phase::lift) {
    if (!lift_target_) {
      const Vec3 up(held.translation.x(), held.translation.y(),
                    std::max(travel, held.translation.z() + 0.02));
      travel_z_ = up.z();
      lift_target_ = compose(Pose{held.rotation, up}, inverse(s.attach_offset));
    }
    return *lift_target_;
  }
  const Vec3 above(support.translation.x() + offset_.x(), support.translation.y() + offset_.y(),
                   0.0);
  if (phase_ == Phase::transit) {
    goal = above + Vec3(0.0, 0.0, travel_z_);
  } else {
    const double drop = sub.kind == SubtaskKind::insert ? kInsertDrop : kPlaceDrop;
    goal = above + Vec3(0.0, 0.0, top + drop);
  }
  return compose(Pose{held.rotation, goal}, inverse(s.attach_offset));
}

std::optional<Action> ScriptedExpert::move_toward(const WorldState& s, const Pose& target,
                                                  double gripper) {
  if (reached(s.ee, target)) return std::nullopt;
  const std::vector<Pose> path = build_bridge(s.ee, target, limits_);
  return Action::Between(s.ee, path.front(), gripper);
}

Action ScriptedExpert::act(const WorldState& s) {
  const auto hold = [&](double gripper) { return Action{Vec3::Zero(), Vec3::Zero(), gripper}; };
  if (phase_ == Phase::done && !finished_ && subtask_ == 0) begin_subtask(s);
  const auto& subtasks = world_->task().subtasks;

  for (int guard = 0; guard < 16; ++guard) {
    if (finished_) return hold(s.gripper_opening);
    switch (phase_) {
      case Phase::approach:
      case Phase::descend:
        if (auto a = move_toward(s, motion_target(s), 1.0)) return *a;
        phase_ = phase_ == Phase::approach ? Phase::descend : Phase::close;
        break;
      case Phase::close:
        if (s.attached && *s.attached == subtasks[subtask_].object) {
          ++subtask_;
          begin_subtask(s);
          break;
        }
        if (++gripper_wait_ > kGripperPatience) {
          finished_ = true;
          break;
        }
        return hold(0.0);
      case Phase::lift:
      case Phase::transit:
      case Phase::lower:
        if (!s.attached) {
          // lost the object; nothing sensible left to do
          finished_ = true;
          break;
        }
        if (auto a = move_toward(s, motion_target(s), 0.0)) return *a;
        phase_ = phase_ == Phase::lift ? Phase::transit
                                       : (phase_ == Phase::transit ? Phase::lower : Phase::open);
        break;
      case Phase::open:
        if (!s.attached) {
          ++subtask_;
          begin_subtask(s);
          break;
        }
        if (++gripper_wait_ > kGripperPatience) {
          finished_ = true;
          break;
        }
        return hold(1.0);
      case Phase::retreat:
        if (auto a = move_toward(s, motion_target(s), 1.0)) return *a;
        phase_ = Phase::done;
        finished_ = true;
        break;
      case Phase::done:
        finished_ = true;
        break;
    }
  }
  throw std::logic_error("ScriptedExpert: phase machine did not settle");
}

SceneConfig canonical_scene(std::map<std::string, Pose> placements) {
  SceneConfig s;
  s.object_placements = std::move(placements);
  return s;
}

RawDemo record_expert(const World& world, const SceneConfig& scene, const CameraRig& rig,
                      ScriptedExpert& expert, int max_steps, Rng& reset_rng) {
  RawDemo raw;
  raw.embodiment_id = scene.embodiment_id;
  raw.source = DemoSource::human_seed;
  WorldState s = world.reset(scene, reset_rng);
  for (int t = 0; t < max_steps; ++t) {
    const Action a = expert.act(s);
    if (expert.finished()) break;
    raw.timesteps.push_back({s.ee_state(), world.observe(s, scene, rig), a});
    raw.worlds.push_back(s);
    s = world.step(s, a);
  }
  raw.worlds.push_back(s);
  return raw;
}

SeedSet make_seed_demos(const World& world, const CameraRig& rig, int count, uint64_t seed,
                        ExpertNoise noise) {
  SeedSet out;
  const auto signals = world.subtask_signals();
  for (int attempt = 0; static_cast<int>(out.demos.size()) < count; ++attempt) {
    if (attempt >= 3 * count + 10) {
      throw std::runtime_error("make_seed_demos: scripted expert keeps failing on task '" +
                               world.task().id + "'");
    }
    Rng rng = make_rng(seed * 1000003ULL + static_cast<uint64_t>(attempt));
    const SceneConfig scene = canonical_scene(sample_placements(world.task(), rng));
    ScriptedExpert expert(world, noise, rng());
    RawDemo raw = record_expert(world, scene, rig, expert, 2000, rng);
    if (raw.timesteps.empty() || !world.check_success(raw.worlds.back())) continue;
    try {
      out.demos.push_back(segment_demonstration(raw, signals));
    } catch (const SegmentationError&) {
      continue;
    }
    out.raw.push_back(std::move(raw));
    out.scenes.push_back(scene);
  }
  return out;
}

}  // namespace scenegen
