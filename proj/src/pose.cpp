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
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

namespace scenegen {

namespace {

std::array<double, 4> canonical(std::array<double, 4> q) {
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("rotation: zero or non-finite quaternion");
  }
  for (double& c : q) c /= n;
  bool flip = q[0] < 0.0;
  if (q[0] == 0.0) {
    for (int i = 1; i < 4; ++i) {
      if (q[i] != 0.0) {
        flip = q[i] < 0.0;
        break;
      }
    }
  }
  if (flip) {
    for (double& c : q) c = -c;
  }
  // -0.0 would break bitwise equality of otherwise identical rotations
  for (double& c : q) c += 0.0;
  return q;
}

}  // namespace

Rotation Rotation::FromWxyz(double w, double x, double y, double z) {
  Rotation r;
  r.q_ = canonical({w, x, y, z});
  return r;
}

Rotation Rotation::FromStored(const std::array<double, 4>& q) {
  const double n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
  bool canonical_sign = q[0] > 0.0;
  if (q[0] == 0.0) {
    for (int i = 1; i < 4; ++i) {
      if (q[i] != 0.0) {
        canonical_sign = q[i] > 0.0;
        break;
      }
    }
  }
  if (std::abs(n2 - 1.0) < 1e-12 && canonical_sign) {
    Rotation r;
    r.q_ = q;
    for (double& c : r.q_) c += 0.0;
    return r;
  }
  return FromWxyz(q[0], q[1], q[2], q[3]);
}

Rotation Rotation::FromAxisAngle(const Vec3& rotation_vector) {
  const double angle = rotation_vector.norm();
  const double half = 0.5 * angle;
  // sin(half) / angle, with its series near zero
  const double s = angle < 1e-8 ? 0.5 - angle * angle / 48.0 : std::sin(half) / angle;
  return FromWxyz(std::cos(half), s * rotation_vector.x(), s * rotation_vector.y(),
                  s * rotation_vector.z());
}

Rotation Rotation::FromMatrix(const Mat3& m) {
  const Eigen::Quaterniond q(m);
  return FromWxyz(q.w(), q.x(), q.y(), q.z());
}

Rotation Rotation::AboutX(double angle) { return FromAxisAngle(Vec3::UnitX() * angle); }
Rotation Rotation::AboutY(double angle) { return FromAxisAngle(Vec3::UnitY() * angle); }
Rotation Rotation::AboutZ(double angle) { return FromAxisAngle(Vec3::UnitZ() * angle); }

Rotation Rotation::inverse() const { return FromWxyz(q_[0], -q_[1], -q_[2], -q_[3]); }

Vec3 Rotation::rotate(const Vec3& v) const {
  const Vec3 u(q_[1], q_[2], q_[3]);
  const Vec3 t = 2.0 * u.cross(v);
  return v + q_[0] * t + u.cross(t);
}

Mat3 Rotation::matrix() const {
  const double w = q_[0], x = q_[1], y = q_[2], z = q_[3];
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

Vec3 Rotation::log() const {
  const Vec3 v(q_[1], q_[2], q_[3]);
  const double n = v.norm();
  if (n < 1e-12) return 2.0 * v / q_[0];
  return v * (2.0 * std::atan2(n, q_[0]) / n);
}

double Rotation::angle() const {
  const double n = std::sqrt(q_[1] * q_[1] + q_[2] * q_[2] + q_[3] * q_[3]);
  return 2.0 * std::atan2(n, std::abs(q_[0]));
}

Rotation operator*(const Rotation& a, const Rotation& b) {
  const auto& p = a.q_;
  const auto& q = b.q_;
  return Rotation::FromWxyz(p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
                            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
                            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
                            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]);
}

Pose Pose::FromMatrix(const Mat4& m) {
  return {Rotation::FromMatrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

Pose inverse(const Pose& a) {
  const Rotation inv = a.rotation.inverse();
  return {inv, -inv.rotate(a.translation)};
}

Pose interpolate(const Pose& a, const Pose& b, double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::invalid_argument("interpolate: u must lie in [0, 1]");
  }
  if (u == 0.0) return a;
  if (u == 1.0) return b;
  // canonical form keeps the relative angle in [0, pi]: shortest arc
  const Rotation relative = a.rotation.inverse() * b.rotation;
  const Rotation partial = Rotation::FromAxisAngle(u * relative.log());
  return {a.rotation * partial, (1.0 - u) * a.translation + u * b.translation};
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
  return (a.inverse() * b).angle();
}

double translation_distance(const Pose& a, const Pose& b) {
  return (a.translation - b.translation).norm();
}

Eigen::Matrix<double, 6, 1> rotation_6d(const Rotation& r) {
  const Mat3 m = r.matrix();
  Eigen::Matrix<double, 6, 1> out;
  out << m.col(0), m.col(1);
  return out;
}

double yaw_of(const Rotation& r) {
  const Vec3 x_axis = r.rotate(Vec3::UnitX());
  return std::atan2(x_axis.y(), x_axis.x());
}

Rotation look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right_raw = forward.cross(up);
  if (right_raw.norm() < 1e-12) {
    throw std::invalid_argument("look_at: up is parallel to the viewing direction");
  }
  const Vec3 right = right_raw.normalized();
  const Vec3 down = forward.cross(right);
  Mat3 m;
  m.col(0) = right;
  m.col(1) = down;
  m.col(2) = forward;
  return Rotation::FromMatrix(m);
}

}  // namespace scenegen
