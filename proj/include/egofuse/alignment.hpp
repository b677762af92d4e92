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

#include <cmath>
#include <span>
#include <vector>

#include "egofuse/kinematics.hpp"
#include "egofuse/sequence.hpp"

namespace egofuse {

struct AlignmentResult {
  Rotation R_A_star;      // rotation about the scene z axis
  double yaw = 0.0;       // radians
  double residual = 0.0;  // geodesic distance left after alignment, radians
};

/// Yaw-only rotation that best maps the IMU head orientation onto the camera
/// orientation at the first frame.
///
/// The geodesic angle between Rz(x) H and C is monotone in
/// tr(Rz(x)^T C H^T) = cos(x)(M00 + M11) + sin(x)(M10 - M01) + M22 with
/// M = C H^T, so the minimiser is the twist angle atan2(M10 - M01, M00 + M11).
inline AlignmentResult align_frames(const PoseVector& theta0_imu, const Rotation& camera0, const Skeleton& sk) {
  const Mat3 head = head_orientation(sk, theta0_imu).matrix();
  const Mat3 m = camera0.matrix() * head.transpose();
  AlignmentResult r;
  const double num = m(1, 0) - m(0, 1);
  const double den = m(0, 0) + m(1, 1);
  r.yaw = (num == 0.0 && den == 0.0) ? 0.0 : std::atan2(num, den);
  r.R_A_star = rot_z(r.yaw);
  r.residual = so3::angle_between(r.R_A_star.matrix() * head, camera0.matrix());
  return r;
}

/// Rotates the IMU root orientation and translation of every frame into the
/// scene frame; articulation is left untouched.
inline Sequence apply_alignment(const Sequence& seq, const Rotation& r_a) {
  const bool identity = r_a.matrix() == Mat3::Identity();
  Sequence out = seq;
  if (identity) return out;
  for (Frame& f : out.frames) {
    const Vec3 root = f.theta_imu.head<3>();
    f.theta_imu.head<3>() = so3::log(r_a.matrix() * so3::exp(root));
    f.t_imu = r_a.matrix() * f.t_imu;
  }
  return out;
}

struct TangentField {
  std::vector<Vec3> tangent;     // unit, or zero where stationary
  std::vector<bool> stationary;
  int gamma = 10;

  size_t size() const { return tangent.size(); }
};

/// Unit forward differences (t[j+gamma] - t[j]) / |...|. Displacements below
/// `motion_threshold` meters mark the frame stationary. The last gamma frames
/// reuse the final computable tangent.
inline TangentField trajectory_tangents(std::span<const Vec3> translations, int gamma,
                                        double motion_threshold = 0.01) {
  if (gamma < 1) throw Error(Errc::invalid_argument, "tangent offset must be at least 1 frame");
  const int n = static_cast<int>(translations.size());
  if (n <= gamma) throw Error(Errc::invalid_argument, "sequence must be longer than the tangent offset");
  TangentField f;
  f.gamma = gamma;
  f.tangent.assign(static_cast<size_t>(n), Vec3::Zero());
  f.stationary.assign(static_cast<size_t>(n), true);
  for (int j = 0; j + gamma < n; ++j) {
    const Vec3 d = translations[static_cast<size_t>(j + gamma)] - translations[static_cast<size_t>(j)];
    const double len = d.norm();
    if (len >= motion_threshold) {
      f.tangent[static_cast<size_t>(j)] = d / len;
      f.stationary[static_cast<size_t>(j)] = false;
    }
  }
  const auto last = static_cast<size_t>(n - gamma - 1);
  for (auto j = last + 1; j < static_cast<size_t>(n); ++j) {
    f.tangent[j] = f.tangent[last];
    f.stationary[j] = f.stationary[last];
  }
  return f;
}

enum class HeadingVariant {
  exact,     // axis = normalised cross product, angle = atan2(|cross|, dot)
  verbatim,  // exp(hat(v_imu x v_cam)): the angle is sin of the true angle
};

/// Rotation taking the IMU travel direction onto the camera travel direction.
inline Mat3 heading_correction_matrix(const Vec3& v_imu, const Vec3& v_cam, HeadingVariant variant) {
  const Vec3 cross = v_imu.cross(v_cam);
  const double s = cross.norm();
  const double c = v_imu.dot(v_cam);
  if (s < 1e-9 && c < 0.0) {
    throw Error(Errc::ambiguous_correction, "tangents are anti-parallel; the correcting rotation is ambiguous");
  }
  if (variant == HeadingVariant::verbatim) return so3::exp(cross);
  if (s < 1e-15) return Mat3::Identity();
  return so3::exp(cross / s * std::atan2(s, c));
}

inline PoseVector apply_heading_correction(const PoseVector& theta, const Mat3& correction) {
  PoseVector out = theta;
  if (correction == Mat3::Identity()) return out;
  out.head<3>() = so3::log(correction * so3::exp(theta.head<3>()));
  return out;
}

/// Corrects the root orientation of one IMU pose so its heading follows the
/// camera trajectory; the other 23 joints are returned unchanged.
inline PoseVector heading_correction(const PoseVector& theta_imu, const Vec3& v_imu, const Vec3& v_cam,
                                     HeadingVariant variant = HeadingVariant::exact) {
  return apply_heading_correction(theta_imu, heading_correction_matrix(v_imu, v_cam, variant));
}

}  // namespace egofuse
