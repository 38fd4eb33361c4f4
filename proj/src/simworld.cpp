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

#include "scenegen/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "scenegen/tolerances.hpp"

namespace scenegen {

namespace {

// slack on region membership so that placements stored through text
// round-trips still validate
constexpr double kRegionSlack = 1e-9;

bool separated(const TaskSpec& task, const std::map<std::string, Pose>& placements) {
  for (auto a = placements.begin(); a != placements.end(); ++a) {
    for (auto b = std::next(a); b != placements.end(); ++b) {
      const Vec3 d = a->second.translation - b->second.translation;
      if (std::hypot(d.x(), d.y()) < task.region.min_separation) return false;
    }
  }
  return true;
}

double planar_distance(const Vec3& a, const Vec3& b) { return std::hypot(a.x() - b.x(), a.y() - b.y()); }

// Is the released object's center above the support's top footprint?
bool over_footprint(const ObjectSpec& object, const Pose& object_pose, const ObjectSpec& support,
                    const Pose& support_pose) {
  switch (support.shape) {
    case Shape::box: {
      const Vec3 local = inverse(support_pose).apply(object_pose.translation);
      return std::abs(local.x()) <= support.half_extents.x() &&
             std::abs(local.y()) <= support.half_extents.y();
    }
    case Shape::post: {
      const double d = planar_distance(object_pose.translation, support_pose.translation);
      if (object.shape == Shape::ring) {
        // a ring centered on the post slides down it; otherwise its body
        // lands on the post top when it overlaps the post
        return d > object.inner_radius - support.radius && d < object.outer_radius + support.radius;
      }
      return d <= support.radius;
    }
    case Shape::ring: {
      const double d = planar_distance(object_pose.translation, support_pose.translation);
      return d >= support.inner_radius && d <= support.outer_radius;
    }
  }
  return false;
}

}  // namespace

World::World(TaskSpec task) : task_(std::move(task)) {
  layout_.num_objects = static_cast<int>(task_.objects.size());
}

WorldState World::reset(const SceneConfig& scene, Rng& rng) const {
  const EmbodimentSpec& body = embodiment(scene.embodiment_id);
  std::map<std::string, Pose> placements = scene.object_placements;
  for (const auto& o : task_.objects) {
    const auto it = placements.find(o.id);
    if (it == placements.end()) {
      throw std::invalid_argument("reset: no placement for object '" + o.id + "'");
    }
    const auto& r = task_.region;
    const Vec3& t = it->second.translation;
    const double yaw = yaw_of(it->second.rotation);
    if (t.x() < r.x_min - kRegionSlack || t.x() > r.x_max + kRegionSlack ||
        t.y() < r.y_min - kRegionSlack || t.y() > r.y_max + kRegionSlack ||
        yaw < r.yaw_min - kRegionSlack || yaw > r.yaw_max + kRegionSlack) {
      throw std::invalid_argument("reset: placement of '" + o.id + "' outside the task region");
    }
  }
  for (int attempt = 0; !separated(task_, placements); ++attempt) {
    if (attempt == 20) throw std::runtime_error("reset: could not separate object placements");
    placements = sample_placements(task_, rng);
  }

  WorldState s;
  s.table_height = task_.table_height + scene.table_height_delta;
  s.embodiment_id = body.id;
  s.ee = body.home_pose();
  s.gripper_opening = 1.0;
  for (const auto& o : task_.objects) {
    const Pose& p = placements.at(o.id);
    s.objects[o.id] = {Rotation::AboutZ(yaw_of(p.rotation)),
                       Vec3(p.translation.x(), p.translation.y(), s.table_height + o.rest_height())};
  }
  return s;
}

WorldState World::step(const WorldState& state, const Action& action) const {
  if (!action.vector().allFinite()) throw std::invalid_argument("step: non-finite action");
  const ContactParams& c = task_.contact;
  WorldState s = state;
  bool clamped = false;

  Action a = action;
  if (const double n = a.translation.norm(); n > c.max_translation) {
    a.translation *= c.max_translation / n;
    clamped = true;
  }
  if (const double n = a.rotation.norm(); n > c.max_rotation) {
    a.rotation *= c.max_rotation / n;
    clamped = true;
  }
  Pose target = compose(s.ee, a.delta());

  const EmbodimentSpec& body = embodiment(s.embodiment_id);
  if (!body.reachable(target.translation)) {
    // project back into the reachable set, keeping a small margin
    const Vec3 lo = body.workspace_min + Vec3::Constant(1e-6);
    const Vec3 hi = body.workspace_max - Vec3::Constant(1e-6);
    Vec3 p = target.translation.cwiseMax(lo).cwiseMin(hi);
    const Vec3 from_base = p - body.base_pose.translation;
    const double limit = body.reach_radius * (1.0 - 1e-9);
    if (from_base.norm() >= limit) p = body.base_pose.translation + from_base * (limit / from_base.norm());
    target.translation = p;
    clamped = true;
  }
  s.ee = target;

  const double previous = s.gripper_opening;
  const double command = std::clamp(a.gripper, 0.0, 1.0);
  s.gripper_opening = previous + std::clamp(command - previous, -c.gripper_rate, c.gripper_rate);

  if (s.attached) s.objects[*s.attached] = compose(s.ee, s.attach_offset);

  if (!s.attached && previous >= c.close_threshold && s.gripper_opening < c.close_threshold) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : task_.objects) {
      if (!o.graspable) continue;
      const double d = (grasp_point(s, o.id) - s.ee.translation).norm();
      if (d <= c.grasp_distance + tol::kAlgebra && d < best) {
        best = d;
        s.attached = o.id;
      }
    }
    if (s.attached) s.attach_offset = compose(inverse(s.ee), s.objects[*s.attached]);
  } else if (s.attached && previous <= c.release_threshold &&
             s.gripper_opening > c.release_threshold) {
    const std::string released = *s.attached;
    s.attached.reset();
    s.attach_offset = Pose::Identity();
    Pose& p = s.objects[released];
    const double z = settle_height(s, released);
    p = {Rotation::AboutZ(yaw_of(p.rotation)), Vec3(p.translation.x(), p.translation.y(), z)};
  }

  if (clamped) ++s.clamped_steps;
  ++s.time;
  return s;
}

double World::settle_height(const WorldState& s, const std::string& released) const {
  const ObjectSpec& spec = task_.object(released);
  const Pose& pose = s.objects.at(released);
  double support_top = s.table_height;
  for (const auto& other : task_.objects) {
    if (other.id == released) continue;
    const Pose& other_pose = s.objects.at(other.id);
    const double top = other_pose.translation.z() + other.top_height();
    // no collisions stop a held object, so an overlap from above that
    // leaves the center above the support top still lands on it
    if (top > pose.translation.z() || top <= support_top) continue;
    if (over_footprint(spec, pose, other, other_pose)) support_top = top;
  }
  return support_top + spec.rest_height();
}

Observation World::observe(const WorldState& state, const SceneConfig& scene,
                           const CameraRig& rig) const {
  if (scene.camera_index < 0 || scene.camera_index >= rig.size()) {
    throw std::out_of_range("observe: camera index outside the rig");
  }
  const Pose world_to_camera = inverse(rig.poses[static_cast<size_t>(scene.camera_index)]);
  Observation o = Observation::Zero(layout_.size());
  const auto put_pose = [&](int offset, const Pose& world_pose) {
    const Pose in_camera = compose(world_to_camera, world_pose);
    o.segment<3>(offset) = in_camera.translation;
    o.segment<6>(offset + 3) = rotation_6d(in_camera.rotation);
  };
  put_pose(ObservationLayout::kEePosition, state.ee);
  o(ObservationLayout::kGripper) = state.gripper_opening;
  for (int i = 0; i < layout_.num_objects; ++i) {
    put_pose(layout_.object(i), state.objects.at(task_.objects[static_cast<size_t>(i)].id));
  }
  o.segment<3>(layout_.light()) = scene.light;
  if (scene.texture_id < 0 || scene.texture_id >= kNumTextures) {
    throw std::out_of_range("observe: texture id outside [0, 17)");
  }
  o(layout_.texture() + scene.texture_id) = 1.0;
  o(layout_.height()) = scene.table_height_delta;
  return o;
}

Vec3 World::grasp_point(const WorldState& state, const std::string& object_id) const {
  return state.object(object_id).apply(task_.object(object_id).grasp_offset);
}

bool World::resting_on(const WorldState& s, const std::string& object,
                       const std::string& support) const {
  if (s.attached && (*s.attached == object || *s.attached == support)) return false;
  const ObjectSpec& o = task_.object(object);
  const ObjectSpec& sup = task_.object(support);
  const Pose& op = s.object(object);
  const Pose& sp = s.object(support);
  const double expected = sp.translation.z() + sup.top_height() + o.rest_height();
  if (std::abs(op.translation.z() - expected) > tol::kContact) return false;
  return over_footprint(o, op, sup, sp);
}

bool World::inserted(const WorldState& s, const std::string& ring, const std::string& post) const {
  if (s.attached && *s.attached == ring) return false;
  const ObjectSpec& r = task_.object(ring);
  const ObjectSpec& p = task_.object(post);
  const Pose& rp = s.object(ring);
  const Pose& pp = s.object(post);
  return planar_distance(rp.translation, pp.translation) <= r.inner_radius &&
         rp.translation.z() < pp.translation.z() + p.top_height();
}

bool World::check_subtask(size_t subtask_index, const WorldState& s) const {
  const SubtaskSpec& sub = task_.subtasks.at(subtask_index);
  switch (sub.kind) {
    case SubtaskKind::grasp: return s.attached && *s.attached == sub.object;
    case SubtaskKind::place_on: return resting_on(s, sub.object, sub.target);
    case SubtaskKind::insert: return inserted(s, sub.object, sub.target);
  }
  return false;
}

bool World::check_success(const WorldState& s) const {
  if (s.attached) return false;
  for (size_t i = 0; i < task_.subtasks.size(); ++i) {
    if (task_.subtasks[i].kind != SubtaskKind::grasp && !check_subtask(i, s)) return false;
  }
  return true;
}

std::vector<SubtaskSignal> World::subtask_signals() const {
  std::vector<SubtaskSignal> signals;
  for (size_t i = 0; i < task_.subtasks.size(); ++i) {
    const SubtaskSpec& sub = task_.subtasks[i];
    signals.push_back({sub.id, sub.reference_object(),
                       [this, i](const WorldState& s) { return check_subtask(i, s); }});
  }
  return signals;
}

}  // namespace scenegen
