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

#include "scenegen/pose.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "scenegen/tolerances.hpp"
#include "test_util.hpp"

namespace scenegen {
namespace {

using testing::kPi;
using testing::oracle_matrix;
using testing::pose_gap;
using testing::random_pose;

Pose rz(double deg, Vec3 t) { return {Rotation::AboutZ(deg * kPi / 180.0), t}; }

TEST_CASE("compose with identity and inverse") {
  std::mt19937_64 rng(1);
  const Pose t = random_pose(rng);
  CHECK(pose_gap(compose(Pose::Identity(), t), t) < tol::kAlgebra);
  CHECK(pose_gap(compose(t, inverse(t)), Pose::Identity()) < tol::kAlgebra);
}

TEST_CASE("compose matches homogeneous matrix product") {
  const Pose a = rz(90, {1, 0, 0});
  const Pose b = rz(90, {0, 1, 0});
  const Pose c = compose(a, b);
  // oracle: [Rz90 | (1,0,0)] * [Rz90 | (0,1,0)] = [Rz180 | (1,0,0) + Rz90 (0,1,0)] = [Rz180 | 0]
  CHECK(testing::matrix_gap(oracle_matrix(c), oracle_matrix(a) * oracle_matrix(b)) < 1e-12);
  CHECK(pose_gap(c, rz(180, {0, 0, 0})) < tol::kAlgebra);
  CHECK(std::abs(c.translation.x() - 0.0) < 1e-12);
  CHECK(std::abs(c.translation.y() - 0.0) < 1e-12);
}

TEST_CASE("inverse of simple poses") {
  CHECK(inverse(Pose::Identity()) == Pose::Identity());
  const Pose inv = inverse(Pose::FromTranslation({1, 2, 3}));
  CHECK(inv.translation.isApprox(Vec3(-1, -2, -3)));
  CHECK(inv.rotation == Rotation());
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    CHECK(testing::matrix_gap(oracle_matrix(inverse(p)), oracle_matrix(p).inverse()) < 1e-12);
  }
}

TEST_CASE("interpolate endpoints and midpoints") {
  std::mt19937_64 rng(3);
  const Pose a = random_pose(rng);
  const Pose b = random_pose(rng);
  CHECK(interpolate(a, b, 0.0) == a);
  CHECK(interpolate(a, b, 1.0) == b);
  const Pose mid = interpolate(Pose::Identity(), Pose::FromTranslation({2, 0, 0}), 0.5);
  CHECK(mid.translation.isApprox(Vec3(1, 0, 0)));
  // axis-angle halving: half of a 90 degree z turn is 45 degrees
  const Pose half = interpolate(rz(0, Vec3::Zero()), rz(90, Vec3::Zero()), 0.5);
  CHECK(geodesic_distance(half.rotation, Rotation::AboutZ(kPi / 4)) < tol::kAlgebra);
  CHECK_THROWS_AS(interpolate(a, b, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(a, b, 1.5), std::invalid_argument);
}

TEST_CASE("interpolation takes the shortest arc") {
  // 350 degrees about z is the same as -10: the midpoint is -5, not 175
  const Pose mid = interpolate(rz(0, Vec3::Zero()), rz(350, Vec3::Zero()), 0.5);
  CHECK(geodesic_distance(mid.rotation, Rotation::AboutZ(-5 * kPi / 180)) < tol::kAlgebra);
}

TEST_CASE("antipodal interpolation is deterministic") {
  const Pose a = Pose::Identity();
  const Pose b{Rotation::AboutZ(kPi), Vec3::Zero()};
  const Pose m1 = interpolate(a, b, 0.5);
  const Pose m2 = interpolate(a, b, 0.5);
  CHECK(m1 == m2);
  CHECK(std::abs(m1.rotation.angle() - kPi / 2) < tol::kAlgebra);
  // canonical axis of the relative rotation points along +z
  CHECK(m1.rotation.log().z() > 0);
}

TEST_CASE("geodesic distance") {
  const Rotation r = Rotation::FromAxisAngle({0.3, -0.2, 0.9});
  CHECK(geodesic_distance(r, r) < tol::kAlgebra);
  CHECK(std::abs(geodesic_distance(Rotation(), Rotation::AboutZ(kPi / 2)) - kPi / 2) <
        tol::kAlgebra);
  // sign-flipped quaternion is the same rotation
  const auto& q = r.wxyz();
  const Rotation neg = Rotation::FromWxyz(-q[0], -q[1], -q[2], -q[3]);
  CHECK(geodesic_distance(r, neg) < tol::kAlgebra);
  CHECK(neg == r);
}

TEST_CASE("canonical quaternion form") {
  const Rotation r = Rotation::FromWxyz(-0.5, 0.5, -0.5, 0.5);
  CHECK(r.w() > 0);
  const Rotation flip = Rotation::FromWxyz(0.0, -1.0, 0.0, 0.0);
  CHECK(flip.x() == 1.0);
  CHECK_THROWS_AS(Rotation::FromWxyz(0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("group laws over random poses") {
  std::mt19937_64 rng(4);
  double worst_assoc = 0.0, worst_inverse = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    worst_assoc = std::max(worst_assoc, pose_gap(compose(compose(a, b), c), compose(a, compose(b, c))));
    worst_inverse = std::max(worst_inverse, pose_gap(compose(a, inverse(a)), Pose::Identity()));
  }
  CHECK(worst_assoc < tol::kAlgebra);
  CHECK(worst_inverse < tol::kAlgebra);
}

TEST_CASE("norm survives long composition chains") {
  std::mt19937_64 rng(5);
  Pose chain;
  for (int i = 0; i < 100; ++i) chain = compose(chain, random_pose(rng));
  const auto& q = chain.rotation.wxyz();
  CHECK(std::abs(std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) - 1.0) <
        tol::kAlgebra);
}

TEST_CASE("geodesic symmetry and triangle inequality") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    const Rotation a = random_pose(rng).rotation;
    const Rotation b = random_pose(rng).rotation;
    const Rotation c = random_pose(rng).rotation;
    CHECK(std::abs(geodesic_distance(a, b) - geodesic_distance(b, a)) < tol::kAlgebra);
    CHECK(geodesic_distance(a, c) <= geodesic_distance(a, b) + geodesic_distance(b, c) + tol::kAlgebra);
  }
}

TEST_CASE("look_at points the optical axis at the target") {
  const Vec3 eye(0.5, -0.4, 0.9);
  const Rotation r = look_at(eye, Vec3::Zero(), Vec3::UnitZ());
  const Vec3 forward = r.rotate(Vec3::UnitZ());
  // distance from the target to the forward ray
  const Vec3 to_target = -eye;
  CHECK((to_target - forward * forward.dot(to_target)).norm() < 1e-12);
  CHECK(r.rotate(Vec3::UnitY()).z() < 0);  // image y points down
}

}  // namespace
}  // namespace scenegen
