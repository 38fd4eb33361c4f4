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


#include <cmath>

#include <Eigen/Geometry>

#include "doctest.h"
#include "scenegen/expert.hpp"
#include "scenegen/simworld.hpp"
#include "test_util.hpp"

using namespace scenegen;
using namespace scenegen::testing;

namespace {

SceneConfig stack_scene(double ax, double ay, double bx, double by) {
  SceneConfig s;
  s.object_placements["cube_a"] = {Rotation::AboutZ(0.1), Vec3(ax, ay, 0.0)};
  s.object_placements["cube_b"] = {Rotation::AboutZ(-0.2), Vec3(bx, by, 0.0)};
  return s;
}

Action hold(double gripper) { return {Vec3::Zero(), Vec3::Zero(), gripper}; }

// closes the gripper with the tool `offset` away from cube_a's grasp point
WorldState close_near_a(const World& w, const Vec3& offset) {
  Rng rng = make_rng(1);
  WorldState s = w.reset(stack_scene(0.45, 0.05, 0.5, -0.1), rng);
  s.ee = {Rotation::AboutX(3.14159265358979), w.grasp_point(s, "cube_a") + offset};
  for (int i = 0; i < 5; ++i) s = w.step(s, hold(0.0));
  return s;
}

Pose from_observation(const Observation& o, int offset) {
  Mat3 m;
  m.col(0) = o.segment<3>(offset + 3);
  m.col(1) = o.segment<3>(offset + 6);
  m.col(2) = m.col(0).cross(m.col(1));
  return {Rotation::FromMatrix(m), o.segment<3>(offset)};
}

}  // namespace

TEST_CASE("reset places objects at rest on the table") {
  const World w(builtin_task("stack"));
  SceneConfig scene = stack_scene(0.4, 0.1, 0.55, -0.1);
  scene.table_height_delta = 0.03;
  Rng a = make_rng(2), b = make_rng(2);
  const WorldState s = w.reset(scene, a);
  CHECK(s.objects.size() == 2);
  CHECK(s.object("cube_a").translation.z() == doctest::Approx(0.03 + 0.02));
  CHECK(s.object("cube_b").translation.z() == doctest::Approx(0.03 + 0.025));
  CHECK(s.object("cube_a").translation.x() == 0.4);
  CHECK(s.ee == embodiment("panda").home_pose());
  CHECK(s.gripper_opening == 1.0);
  CHECK_FALSE(s.attached);
  const WorldState t = w.reset(scene, b);
  CHECK(t.objects == s.objects);
  CHECK(t.ee == s.ee);
  CHECK_THROWS_AS(w.reset(stack_scene(1.5, 0.0, 0.5, 0.0), a), std::invalid_argument);
}

TEST_CASE("overlapping placements are redrawn") {
  const World w(builtin_task("stack"));
  Rng rng = make_rng(3);
  const WorldState s = w.reset(stack_scene(0.45, 0.0, 0.46, 0.0), rng);
  const double d = (s.object("cube_a").translation - s.object("cube_b").translation).head<2>().norm();
  CHECK(d >= w.task().region.min_separation);
}

TEST_CASE("zero action only servos the gripper") {
  const World w(builtin_task("stack"));
  Rng rng = make_rng(4);
  const WorldState s = w.reset(stack_scene(0.4, 0.1, 0.55, -0.1), rng);
  const WorldState same = w.step(s, hold(1.0));
  CHECK(same.ee == s.ee);
  CHECK(same.objects == s.objects);
  CHECK(same.gripper_opening == 1.0);
  CHECK(same.time == s.time + 1);
  const WorldState closing = w.step(s, hold(0.0));
  CHECK(closing.ee == s.ee);
  CHECK(closing.gripper_opening == doctest::Approx(0.8));
}

TEST_CASE("oversized commands are scaled to the step limits") {
  const World w(builtin_task("stack"));
  Rng rng = make_rng(5);
  const WorldState s = w.reset(stack_scene(0.4, 0.1, 0.55, -0.1), rng);
  const WorldState t = w.step(s, {Vec3(0.0, 0.3, 0.0), Vec3(0.0, 0.0, 1.0), 1.0});
  CHECK(translation_distance(t.ee, s.ee) == doctest::Approx(0.05));
  CHECK(geodesic_distance(t.ee.rotation, s.ee.rotation) == doctest::Approx(0.2));
  CHECK(t.clamped_steps == 1);
}

TEST_CASE("grasp attaches within one centimeter") {
  const World w(builtin_task("stack"));
  const WorldState near = close_near_a(w, Vec3(0, 0, 0.01));
  REQUIRE(near.attached);
  CHECK(*near.attached == "cube_a");
  CHECK(near.gripper_opening < w.task().contact.close_threshold);
  CHECK_FALSE(close_near_a(w, Vec3(0, 0, 0.015)).attached);
  CHECK_FALSE(close_near_a(w, Vec3(0.008, 0.008, 0.0)).attached);
}

TEST_CASE("attached objects follow the end effector rigidly") {
  const World w(builtin_task("stack"));
  WorldState s = close_near_a(w, Vec3(0, 0, 0.005));
  REQUIRE(s.attached);
  const Pose offset = compose(inverse(s.ee), s.object("cube_a"));
  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  for (int i = 0; i < 50; ++i) {
    s = w.step(s, {Vec3(u(rng), u(rng), std::abs(u(rng))), Vec3(u(rng), u(rng), u(rng)) * 5, 0.0});
    REQUIRE(s.attached);
    CHECK(pose_gap(compose(inverse(s.ee), s.object("cube_a")), offset) <= 1e-12);
  }
}

TEST_CASE("release settles on the cube below") {
  const World w(builtin_task("stack"));
  WorldState s = close_near_a(w, Vec3::Zero());
  REQUIRE(s.attached);
  const Pose b = s.object("cube_b");
  // carry cube_a above cube_b
  const Vec3 above = b.translation + Vec3(0.004, -0.003, 0.08);
  while ((s.object("cube_a").translation - above).norm() > 1e-9) {
    const Vec3 d = above - s.object("cube_a").translation;
    const Vec3 step = s.ee.rotation.inverse().rotate(d.norm() > 0.04 ? Vec3(d * (0.04 / d.norm())) : d);
    s = w.step(s, {step, Vec3::Zero(), 0.0});
  }
  CHECK_FALSE(w.check_success(s));  // still held
  for (int i = 0; i < 5 && s.attached; ++i) s = w.step(s, hold(1.0));
  CHECK_FALSE(s.attached);
  CHECK(s.object("cube_a").translation.z() == doctest::Approx(b.translation.z() + 0.025 + 0.02));
  CHECK(w.resting_on(s, "cube_a", "cube_b"));
  CHECK(w.check_success(s));
}

TEST_CASE("release over the table drops to the table") {
  const World w(builtin_task("stack"));
  WorldState s = close_near_a(w, Vec3::Zero());
  for (int i = 0; i < 4; ++i) s = w.step(s, {Vec3(0.0, 0.0, -0.03), Vec3::Zero(), 0.0});
  for (int i = 0; i < 5; ++i) s = w.step(s, hold(1.0));
  CHECK_FALSE(s.attached);
  CHECK(s.object("cube_a").translation.z() == doctest::Approx(s.table_height + 0.02));
  CHECK(std::abs(s.object("cube_a").rotation.matrix()(2, 2) - 1.0) < 1e-12);
}

TEST_CASE("success predicates on hand-built states") {
  const World w(builtin_task("stack"));
  Rng rng = make_rng(7);
  WorldState s = w.reset(stack_scene(0.4, 0.1, 0.55, -0.1), rng);
  CHECK_FALSE(w.check_success(s));
  const Pose b = s.object("cube_b");
  s.objects["cube_a"] = {Rotation::AboutZ(0.3), b.translation + Vec3(0.01, 0.0, 0.045)};
  CHECK(w.check_success(s));
  s.attached = "cube_a";
  CHECK_FALSE(w.check_success(s));
  s.attached.reset();
  s.objects["cube_a"].translation.x() += 0.02;  // beyond the half extent
  CHECK_FALSE(w.check_success(s));

  const World three(builtin_task("stack_three"));
  SceneConfig sc;
  sc.object_placements = {{"cube_a", {Rotation(), Vec3(0.4, 0.1, 0)}},
                          {"cube_b", {Rotation(), Vec3(0.5, -0.1, 0)}},
                          {"cube_c", {Rotation(), Vec3(0.55, 0.15, 0)}}};
  WorldState t = three.reset(sc, rng);
  const Pose tb = t.object("cube_b");
  t.objects["cube_a"].translation = tb.translation + Vec3(0, 0, 0.045);
  CHECK_FALSE(three.check_success(t));
  t.objects["cube_c"].translation = tb.translation + Vec3(0, 0, 0.085);
  CHECK(three.check_success(t));

  const World post(builtin_task("square_post"));
  SceneConfig sp;
  sp.object_placements = {{"ring", {Rotation(), Vec3(0.4, 0.1, 0)}},
                          {"post", {Rotation(), Vec3(0.5, -0.1, 0)}}};
  WorldState p = post.reset(sp, rng);
  CHECK_FALSE(post.check_success(p));
  p.objects["ring"].translation = p.object("post").translation + Vec3(0.01, 0.0, -0.03);
  CHECK(post.check_success(p));
  p.objects["ring"].translation.x() += 0.02;  // axis outside the inner radius
  CHECK_FALSE(post.check_success(p));
}

TEST_CASE("observations are camera-frame projections") {
  const World w(builtin_task("stack"));
  const CameraRig rig = fibonacci_cap({});
  Rng rng = make_rng(8);
  SceneConfig scene = stack_scene(0.4, 0.1, 0.55, -0.1);
  scene.texture_id = 4;
  scene.light = Vec3(0.1, 0.2, 0.3);
  scene.table_height_delta = -0.01;
  for (int trial = 0; trial < 50; ++trial) {
    WorldState s = w.reset(scene, rng);
    s.ee = random_pose(rng, 0.5);
    s.gripper_opening = 0.37;
    scene.camera_index = trial;
    const Observation o = w.observe(s, scene, rig);
    REQUIRE(o.size() == w.observation_dim());
    const Pose& cam = rig.poses[trial];
    CHECK(pose_gap(compose(cam, from_observation(o, ObservationLayout::kEePosition)), s.ee) <= 1e-9);
    for (int i = 0; i < 2; ++i) {
      const Pose world = s.object(w.task().objects[i].id);
      CHECK(pose_gap(compose(cam, from_observation(o, w.layout().object(i))), world) <= 1e-9);
    }
    CHECK(o[ObservationLayout::kGripper] == 0.37);
    CHECK(o.segment<3>(w.layout().light()) == scene.light);
    CHECK(o.segment<kNumTextures>(w.layout().texture()).sum() == 1.0);
    CHECK(o[w.layout().texture() + 4] == 1.0);
    CHECK(o[w.layout().height()] == -0.01);
  }
}

TEST_CASE("observation depends on the camera and vanishes at its origin") {
  const World w(builtin_task("stack"));
  const CameraRig rig = fibonacci_cap({});
  Rng rng = make_rng(9);
  SceneConfig scene = stack_scene(0.4, 0.1, 0.55, -0.1);
  WorldState s = w.reset(scene, rng);
  scene.camera_index = 3;
  const Observation a = w.observe(s, scene, rig);
  scene.camera_index = 4;
  CHECK(w.observe(s, scene, rig) != a);
  s.objects["cube_a"] = rig.poses[4];
  CHECK(w.observe(s, scene, rig).segment<3>(w.layout().object(0)).norm() <= 1e-12);
  scene.camera_index = 100;
  CHECK_THROWS_AS(w.observe(s, scene, rig), std::out_of_range);
}

TEST_CASE("resting objects never sink below the table") {
  const World w(builtin_task("stack"));
  Rng rng = make_rng(10);
  std::uniform_real_distribution<double> u(-0.03, 0.03);
  std::uniform_real_distribution<double> g(0.0, 1.0);
  WorldState s = w.reset(stack_scene(0.45, 0.05, 0.5, -0.1), rng);
  for (int i = 0; i < 2000; ++i) {
    s = w.step(s, {Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), g(rng) < 0.5 ? 0.0 : 1.0});
    for (const auto& o : w.task().objects) {
      if (s.attached && *s.attached == o.id) continue;
      CHECK(s.object(o.id).translation.z() - o.rest_height() >= s.table_height - 1e-6);
    }
    if (s.attached) CHECK(s.gripper_opening < w.task().contact.release_threshold);
  }
}

TEST_CASE("scripted expert seed demonstrations succeed on every task") {
  const CameraRig rig = fibonacci_cap({});
  for (const auto& id : builtin_task_ids()) {
    const World w(builtin_task(id));
    const SeedSet seeds = make_seed_demos(w, rig, 10, 11);
    CHECK(seeds.demos.size() == 10);
    for (const auto& raw : seeds.raw) CHECK(w.check_success(raw.worlds.back()));
  }
}

TEST_CASE("task definitions round trip through json") {
  for (const auto& id : builtin_task_ids()) {
    const TaskSpec t = builtin_task(id);
    CHECK(to_json(task_from_json(to_json(t))) == to_json(t));
  }
  CHECK_THROWS_AS(builtin_task("threading"), std::invalid_argument);
}
