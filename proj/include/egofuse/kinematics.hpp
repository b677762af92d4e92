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

#include <array>
#include <vector>

#include <Eigen/Core>

#include "egofuse/rotation.hpp"
#include "egofuse/skeleton.hpp"

namespace egofuse {

using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;

/// Body pose: 24 axis-angle triples (triple 0 is the root orientation) and a
/// root translation in meters.
struct BodyPose {
  PoseVector theta = PoseVector::Zero();
  Vec3 trans = Vec3::Zero();

  Vec3 joint_aa(int i) const { return theta.segment<3>(3 * i); }
  void set_joint_aa(int i, const Vec3& v) { theta.segment<3>(3 * i) = v; }
  bool is_finite() const { return theta.allFinite() && trans.allFinite(); }
};

struct JointTransforms {
  std::array<Mat3, kNumJoints> rotation;
  std::array<Vec3, kNumJoints> position;
};

inline JointTransforms forward_kinematics(const Skeleton& sk, const BodyPose& p) {
  if (!p.is_finite()) throw Error(Errc::invalid_argument, "pose must be finite");
  JointTransforms out;
  const double s = sk.scale();
  for (int i = 0; i < kNumJoints; ++i) {
    const Mat3 local = so3::exp(p.joint_aa(i));
    const int parent = sk.joint(i).parent;
    if (parent < 0) {
      out.rotation[0] = local;
      out.position[0] = p.trans + s * sk.joint(0).offset;
    } else {
      const auto pi = static_cast<size_t>(parent);
      out.rotation[static_cast<size_t>(i)] = out.rotation[pi] * local;
      out.position[static_cast<size_t>(i)] = out.position[pi] + out.rotation[pi] * (s * sk.joint(i).offset);
    }
  }
  return out;
}

/// Head orientation: ordered product of exp(theta_i) along the head chain.
inline Rotation head_orientation(const Skeleton& sk, const PoseVector& theta) {
  Mat3 r = Mat3::Identity();
  for (int i : sk.head_chain()) r = r * so3::exp(theta.segment<3>(3 * i));
  return Rotation::unchecked(r);
}

/// Constant head-to-camera rotation from the first frame.
inline Rotation head_camera_offset(const Skeleton& sk, const PoseVector& theta0_imu, const Rotation& camera0) {
  return head_orientation(sk, theta0_imu).transpose() * camera0;
}

inline Rotation camera_from_pose(const Skeleton& sk, const PoseVector& theta, const Rotation& head_to_camera) {
  return head_orientation(sk, theta) * head_to_camera;
}

inline Vec3 marker_position(const JointTransforms& fk, const FootMarker& m, double scale) {
  const auto j = static_cast<size_t>(m.joint);
  return fk.position[j] + fk.rotation[j] * (scale * m.offset);
}

inline std::vector<Vec3> foot_points(const Skeleton& sk, const JointTransforms& fk, FootPart k) {
  std::vector<Vec3> out;
  out.reserve(sk.markers(k).size());
  for (const auto& m : sk.markers(k)) out.push_back(marker_position(fk, m, sk.scale()));
  return out;
}

inline std::vector<Vec3> foot_points(const Skeleton& sk, const BodyPose& p, FootPart k) {
  return foot_points(sk, forward_kinematics(sk, p), k);
}

// ---------------------------------------------------------------------------
// Derivatives. Perturbing theta_i by d rotates everything below joint i about
// position[i] by the world-frame vector rotation[i] * Jr(theta_i) * d.

/// World-frame angular Jacobian of joint i with respect to its own axis-angle.
inline Mat3 joint_angular_jacobian(const JointTransforms& fk, const BodyPose& p, int i) {
  return fk.rotation[static_cast<size_t>(i)] * so3::right_jacobian(p.joint_aa(i));
}

using PoseJacobian = Eigen::Matrix<double, 3, kPoseDim + 3>;

/// d(marker) / d(theta, trans); columns 0..71 are theta, 72..74 trans.
inline std::vector<PoseJacobian> foot_points_jacobian(const Skeleton& sk, const BodyPose& p, FootPart k) {
  const JointTransforms fk = forward_kinematics(sk, p);
  std::vector<PoseJacobian> out;
  for (const auto& m : sk.markers(k)) {
    const Vec3 x = marker_position(fk, m, sk.scale());
    PoseJacobian jac = PoseJacobian::Zero();
    for (int i : sk.chain_to(m.joint)) {
      const Vec3 lever = x - fk.position[static_cast<size_t>(i)];
      jac.block<3, 3>(0, 3 * i) = -so3::hat(lever) * joint_angular_jacobian(fk, p, i);
    }
    jac.block<3, 3>(0, kPoseDim).setIdentity();
    out.push_back(jac);
  }
  return out;
}

/// World-frame angular Jacobian of the predicted camera orientation:
/// camera(theta + d) ~= exp(hat(J d)) camera(theta).
inline Eigen::Matrix<double, 3, kPoseDim> camera_orientation_jacobian(const Skeleton& sk, const BodyPose& p) {
  const JointTransforms fk = forward_kinematics(sk, p);
  Eigen::Matrix<double, 3, kPoseDim> jac = Eigen::Matrix<double, 3, kPoseDim>::Zero();
  for (int i : sk.head_chain()) jac.block<3, 3>(0, 3 * i) = joint_angular_jacobian(fk, p, i);
  return jac;
}

}  // namespace egofuse
