// Copyright 2026 The egofuse Authors
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

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "egofuse/error.hpp"

namespace egofuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

namespace so3 {

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

// Rodrigues formula. Below 1e-7 rad the second-order Taylor expansion is
// exact to machine precision.
inline Mat3 exp(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = hat(v);
  if (theta < 1e-7) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * k + b * k * k;
}

inline Vec3 log(const Mat3& r) {
  const Vec3 w = vee(r);  // sin(theta) * axis
  const double s = w.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < 1e-7) {
    // first order; theta/sin(theta) = 1 + theta^2/6 + ...
    return w * (1.0 + theta * theta / 6.0);
  }
  if (c > -0.99) {
    return w * (theta / s);
  }

  // Near pi: the symmetric part is (1 - cos) a a^T + cos I. The column with the
  // largest diagonal entry gives the best-conditioned axis estimate.
  const Mat3 sym = 0.5 * (r + r.transpose()) - c * Mat3::Identity();
  int k = 0;
  sym.diagonal().maxCoeff(&k);
  Vec3 axis = sym.col(k) / std::sqrt(std::max(sym(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0.0) axis = -axis;
  return axis * theta;
}

// Right Jacobian: exp(v + d) ~= exp(v) exp(Jr(v) d).
inline Mat3 right_jacobian(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const Mat3 k = hat(v);
  double a;
  double b;
  if (theta2 < 1e-8) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() - a * k + b * k * k;
}

inline Mat3 rot_x(double a) { return exp(Vec3(a, 0.0, 0.0)); }
inline Mat3 rot_y(double a) { return exp(Vec3(0.0, a, 0.0)); }

// Exact z-rotation: the off-axis entries are literal zeros.
inline Mat3 rot_z(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 m;
  m << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return m;
}

inline double angle_between(const Mat3& a, const Mat3& b) {
  return log(a.transpose() * b).norm();
}

// Constant-speed geodesic interpolation, u in [0, 1].
inline Mat3 interpolate(const Mat3& a, const Mat3& b, double u) {
  return a * exp(u * log(a.transpose() * b));
}

inline Mat3 from_quaternion_wxyz(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  if (!(q.norm() > 0.0) || !std::isfinite(q.norm())) {
    throw Error(Errc::invalid_rotation, "quaternion must be finite and non-zero");
  }
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector4d to_quaternion_wxyz(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

}  // namespace so3

/// Axis-angle vector: direction is the axis, magnitude the angle in radians.
struct AxisAngle {
  Vec3 v = Vec3::Zero();

  AxisAngle() = default;
  explicit AxisAngle(const Vec3& vec) : v(vec) {}
  AxisAngle(double x, double y, double z) : v(x, y, z) {}

  double angle() const { return v.norm(); }
  bool is_finite() const { return v.allFinite(); }
};

/// Element of SO(3), stored as an orthonormal matrix with det +1.
class Rotation {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation() : m_(Mat3::Identity()) {}

  // Validating constructor.
  explicit Rotation(const Mat3& m) : m_(m) {
    if (!is_valid(m)) {
      throw Error(Errc::invalid_rotation, "matrix is not orthonormal with det +1");
    }
  }

  static Rotation identity() { return Rotation(); }

  // Skips validation; for products of already-valid rotations.
  static Rotation unchecked(const Mat3& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  static bool is_valid(const Mat3& m, double tol = kTolerance) {
    if (!m.allFinite()) return false;
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(m.determinant() - 1.0) <= tol;
  }

  const Mat3& matrix() const { return m_; }
  Rotation transpose() const { return unchecked(m_.transpose()); }
  Rotation inverse() const { return transpose(); }

  Rotation operator*(const Rotation& o) const { return unchecked(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  Mat3 m_;
};

inline Rotation exp(const AxisAngle& a) {
  if (!a.is_finite()) throw Error(Errc::invalid_argument, "axis-angle must be finite");
  return Rotation::unchecked(so3::exp(a.v));
}

inline AxisAngle log(const Rotation& r) {
  if (!Rotation::is_valid(r.matrix())) {
    throw Error(Errc::invalid_rotation, "log of a non-orthonormal matrix");
  }
  return AxisAngle(so3::log(r.matrix()));
}

inline double geodesic_distance(const Rotation& a, const Rotation& b) {
  return log(a.transpose() * b).angle();
}

inline Rotation rot_x(double a) { return Rotation::unchecked(so3::rot_x(a)); }
inline Rotation rot_y(double a) { return Rotation::unchecked(so3::rot_y(a)); }
inline Rotation rot_z(double a) { return Rotation::unchecked(so3::rot_z(a)); }

}  // namespace egofuse
