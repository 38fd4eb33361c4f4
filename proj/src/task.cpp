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

#include "scenegen/task.hpp"

#include <numbers>
#include <stdexcept>

namespace scenegen {

namespace {

constexpr double kPi = std::numbers::pi;

ObjectSpec cube(std::string id, double half) {
  ObjectSpec o;
  o.id = std::move(id);
  o.shape = Shape::box;
  o.half_extents = Vec3::Constant(half);
  return o;
}

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::box: return "box";
    case Shape::ring: return "ring";
    case Shape::post: return "post";
  }
  return "?";
}

Shape parse_shape(const std::string& s) {
  if (s == "box") return Shape::box;
  if (s == "ring") return Shape::ring;
  if (s == "post") return Shape::post;
  throw std::invalid_argument("task: unknown shape '" + s + "'");
}

const char* kind_name(SubtaskKind k) {
  switch (k) {
    case SubtaskKind::grasp: return "grasp";
    case SubtaskKind::place_on: return "place_on";
    case SubtaskKind::insert: return "insert";
  }
  return "?";
}

SubtaskKind parse_kind(const std::string& s) {
  if (s == "grasp") return SubtaskKind::grasp;
  if (s == "place_on") return SubtaskKind::place_on;
  if (s == "insert") return SubtaskKind::insert;
  throw std::invalid_argument("task: unknown subtask kind '" + s + "'");
}

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("task: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void validate(const TaskSpec& t) {
  if (t.id.empty()) throw std::invalid_argument("task: empty id");
  if (t.objects.empty()) throw std::invalid_argument("task: no objects");
  if (t.subtasks.empty()) throw std::invalid_argument("task: no subtasks");
  const auto& r = t.region;
  if (!(r.x_min < r.x_max && r.y_min < r.y_max && r.yaw_min <= r.yaw_max)) {
    throw std::invalid_argument("task: empty placement region");
  }
  for (const auto& o : t.objects) {
    if (o.rest_height() <= 0.0) {
      throw std::invalid_argument("task: object '" + o.id + "' has no extent");
    }
  }
  for (const auto& s : t.subtasks) {
    t.object(s.object);
    if (s.kind == SubtaskKind::grasp) {
      if (!t.object(s.object).graspable) {
        throw std::invalid_argument("task: object '" + s.object + "' is not graspable");
      }
    } else {
      t.object(s.target);
    }
  }
}

}  // namespace

double ObjectSpec::rest_height() const {
  switch (shape) {
    case Shape::box: return half_extents.z();
    case Shape::ring: return half_height;
    case Shape::post: return 0.5 * height;
  }
  return 0.0;
}

double ObjectSpec::top_height() const { return rest_height(); }

bool PlacementRegion::contains(double x, double y, double yaw) const {
  return x >= x_min && x <= x_max && y >= y_min && y <= y_max && yaw >= yaw_min &&
         yaw <= yaw_max;
}

const ObjectSpec& TaskSpec::object(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw std::invalid_argument("task '" + this->id + "': unknown object '" + std::string(id) + "'");
}

int TaskSpec::object_index(std::string_view id) const {
  for (size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

const std::vector<std::string>& builtin_task_ids() {
  static const std::vector<std::string> ids = {"stack", "stack_three", "square_post"};
  return ids;
}

TaskSpec builtin_task(std::string_view id) {
  TaskSpec t;
  t.id = std::string(id);
  if (id == "stack") {
    t.objects = {cube("cube_a", 0.02), cube("cube_b", 0.025)};
    t.region = {0.35, 0.60, -0.20, 0.20, -kPi / 4, kPi / 4, 0.10};
    t.subtasks = {{"grasp_a", SubtaskKind::grasp, "cube_a", ""},
                  {"place_a_on_b", SubtaskKind::place_on, "cube_a", "cube_b"}};
  } else if (id == "stack_three") {
    t.objects = {cube("cube_a", 0.02), cube("cube_b", 0.025), cube("cube_c", 0.02)};
    t.region = {0.35, 0.62, -0.22, 0.22, -kPi / 4, kPi / 4, 0.09};
    t.subtasks = {{"grasp_a", SubtaskKind::grasp, "cube_a", ""},
                  {"place_a_on_b", SubtaskKind::place_on, "cube_a", "cube_b"},
                  {"grasp_c", SubtaskKind::grasp, "cube_c", ""},
                  {"place_c_on_a", SubtaskKind::place_on, "cube_c", "cube_a"}};
  } else if (id == "square_post") {
    ObjectSpec ring;
    ring.id = "ring";
    ring.shape = Shape::ring;
    ring.inner_radius = 0.025;
    ring.outer_radius = 0.045;
    ring.half_height = 0.01;
    ring.grasp_offset = Vec3(0.06, 0.0, 0.0);
    ObjectSpec post;
    post.id = "post";
    post.shape = Shape::post;
    post.radius = 0.012;
    post.height = 0.10;
    post.graspable = false;
    t.objects = {ring, post};
    t.region = {0.38, 0.58, -0.18, 0.18, -kPi / 6, kPi / 6, 0.16};
    t.subtasks = {{"grasp_ring", SubtaskKind::grasp, "ring", ""},
                  {"insert_ring", SubtaskKind::insert, "ring", "post"}};
  } else {
    throw std::invalid_argument("unknown task '" + std::string(id) + "'");
  }
  validate(t);
  return t;
}

nlohmann::json to_json(const TaskSpec& task) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : task.objects) {
    nlohmann::json jo = {{"id", o.id}, {"shape", shape_name(o.shape)},
                         {"grasp_offset", vec_json(o.grasp_offset)}, {"graspable", o.graspable}};
    switch (o.shape) {
      case Shape::box: jo["half_extents"] = vec_json(o.half_extents); break;
      case Shape::ring:
        jo["inner_radius"] = o.inner_radius;
        jo["outer_radius"] = o.outer_radius;
        jo["half_height"] = o.half_height;
        break;
      case Shape::post:
        jo["radius"] = o.radius;
        jo["height"] = o.height;
        break;
    }
    objects.push_back(jo);
  }
  nlohmann::json subtasks = nlohmann::json::array();
  for (const auto& s : task.subtasks) {
    nlohmann::json js = {{"id", s.id}, {"kind", kind_name(s.kind)}, {"object", s.object}};
    if (s.kind != SubtaskKind::grasp) js["target"] = s.target;
    subtasks.push_back(js);
  }
  const auto& r = task.region;
  const auto& c = task.contact;
  return {{"id", task.id},
          {"table_height", task.table_height},
          {"objects", objects},
          {"region",
           {{"x", {r.x_min, r.x_max}},
            {"y", {r.y_min, r.y_max}},
            {"yaw", {r.yaw_min, r.yaw_max}},
            {"min_separation", r.min_separation}}},
          {"subtasks", subtasks},
          {"contact",
           {{"grasp_distance", c.grasp_distance},
            {"close_threshold", c.close_threshold},
            {"release_threshold", c.release_threshold},
            {"gripper_rate", c.gripper_rate},
            {"max_translation", c.max_translation},
            {"max_rotation", c.max_rotation}}}};
}

TaskSpec task_from_json(const nlohmann::json& j) {
  try {
    TaskSpec t;
    t.id = j.at("id").get<std::string>();
    t.table_height = j.value("table_height", 0.0);
    for (const auto& jo : j.at("objects")) {
      ObjectSpec o;
      o.id = jo.at("id").get<std::string>();
      o.shape = parse_shape(jo.at("shape").get<std::string>());
      if (jo.contains("grasp_offset")) o.grasp_offset = vec_from(jo["grasp_offset"]);
      o.graspable = jo.value("graspable", o.shape != Shape::post);
      switch (o.shape) {
        case Shape::box: o.half_extents = vec_from(jo.at("half_extents")); break;
        case Shape::ring:
          o.inner_radius = jo.at("inner_radius").get<double>();
          o.outer_radius = jo.at("outer_radius").get<double>();
          o.half_height = jo.at("half_height").get<double>();
          break;
        case Shape::post:
          o.radius = jo.at("radius").get<double>();
          o.height = jo.at("height").get<double>();
          break;
      }
      t.objects.push_back(o);
    }
    const auto& jr = j.at("region");
    t.region.x_min = jr.at("x").at(0).get<double>();
    t.region.x_max = jr.at("x").at(1).get<double>();
    t.region.y_min = jr.at("y").at(0).get<double>();
    t.region.y_max = jr.at("y").at(1).get<double>();
    t.region.yaw_min = jr.at("yaw").at(0).get<double>();
    t.region.yaw_max = jr.at("yaw").at(1).get<double>();
    t.region.min_separation = jr.value("min_separation", 0.0);
    for (const auto& js : j.at("subtasks")) {
      SubtaskSpec s;
      s.id = js.at("id").get<std::string>();
      s.kind = parse_kind(js.at("kind").get<std::string>());
      s.object = js.at("object").get<std::string>();
      if (s.kind != SubtaskKind::grasp) s.target = js.at("target").get<std::string>();
      t.subtasks.push_back(s);
    }
    if (j.contains("contact")) {
      const auto& jc = j["contact"];
      auto& c = t.contact;
      c.grasp_distance = jc.value("grasp_distance", c.grasp_distance);
      c.close_threshold = jc.value("close_threshold", c.close_threshold);
      c.release_threshold = jc.value("release_threshold", c.release_threshold);
      c.gripper_rate = jc.value("gripper_rate", c.gripper_rate);
      c.max_translation = jc.value("max_translation", c.max_translation);
      c.max_rotation = jc.value("max_rotation", c.max_rotation);
    }
    validate(t);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("task: ") + e.what());
  }
}

}  // namespace scenegen
