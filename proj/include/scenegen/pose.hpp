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

#ifndef SCENEGEN_POSE_HPP_
#define SCENEGEN_POSE_HPP_

#include <array>

#include <Eigen/Core>

namespace scenegen {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Unit quaternion rotation. Always normalized and canonicalized to the
// hemisphere w >= 0 (for w == 0 the first nonzero of x, y, z is positive),
// so every rotation has exactly one stored representation.
class Rotation {
 public:
  Rotation() = default;

  // Normalizes and canonicalizes. Throws std::invalid_argument on a zero or
  // non-finite quaternion.
  static Rotation FromWxyz(double w, double x, double y, double z);
  // Keeps the components bit-exact when they are already a canonical unit
  // quaternion (within 1e-12), otherwise same as FromWxyz. For
  // deserializing stored rotations.
  static Rotation FromStored(const std::array<double, 4>& wxyz);
  // Rotation vector (axis * angle, radians).
  static Rotation FromAxisAngle(const Vec3& rotation_vector);
  static Rotation FromMatrix(const Mat3& m);
  static Rotation AboutX(double angle);
  static Rotation AboutY(double angle);
  static Rotation AboutZ(double angle);

  double w() const { return q_[0]; }
  double x() const { return q_[1]; }
  double y() const { return q_[2]; }
  double z() const { return q_[3]; }
  const std::array<double, 4>& wxyz() const { return q_; }

  Rotation inverse() const;
  Vec3 rotate(const Vec3& v) const;
  Mat3 matrix() const;
  // Rotation vector in [0, pi] * axis.
  Vec3 log() const;
  // Rotation angle in [0, pi].
  double angle() const;

  friend Rotation operator*(const Rotation& a, const Rotation& b);
  friend bool operator==(const Rotation& a, const Rotation& b) = default;

 private:
  std::array<double, 4> q_{1.0, 0.0, 0.0, 0.0};
};

// Rigid transform x -> R x + t. Composition reads right to left:
// compose(a, b) applies b first, then a.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose Identity() { return {}; }
  static Pose FromTranslation(const Vec3& t) { return {Rotation(), t}; }
  static Pose FromMatrix(const Mat4& m);

  Mat4 matrix() const;
  Vec3 apply(const Vec3& p) const {
    return rotation.rotate(p) + translation;
  }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& a);

// Linear translation, shortest-arc rotation. u must lie in [0, 1]
// (std::invalid_argument otherwise); u == 0 and u == 1 return the
// endpoints exactly. For relative rotations of exactly pi the canonical
// axis (first nonzero component positive) is followed.
Pose interpolate(const Pose& a, const Pose& b, double u);

// Angle of a^-1 b, in [0, pi]. Insensitive to quaternion sign.
double geodesic_distance(const Rotation& a, const Rotation& b);

// Euclidean distance between the translations.
double translation_distance(const Pose& a, const Pose& b);

// First two columns of the rotation matrix, stacked (continuous 6D form).
Eigen::Matrix<double, 6, 1> rotation_6d(const Rotation& r);

// Heading of the rotated x axis projected on the xy plane.
double yaw_of(const Rotation& r);

// Camera-style orientation at `eye` looking at `target`: z forward,
// x right, y down. `up` must not be parallel to the viewing direction.
Rotation look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

}  // namespace scenegen

#endif  // SCENEGEN_POSE_HPP_
