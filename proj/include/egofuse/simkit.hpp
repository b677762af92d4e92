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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egofuse/kinematics.hpp"
#include "egofuse/scene.hpp"
#include "egofuse/sequence.hpp"

namespace egofuse {

enum class PathType { line, circle, waypoints };

struct GaitSpec {
  double step_period = 0.5;  // seconds per step (half a gait cycle)
  double clearance = 0.05;   // peak swing height, meters
};

struct ImuCorruption {
  double yaw_drift = 0.0;           // rad/s, accumulated linearly
  double translation_drift = 0.0;   // m/s along a seeded horizontal direction
  double articulation_noise = 0.0;  // rad, white noise on non-root joints
  double frame_yaw = 0.0;           // constant heading offset of the IMU frame, rad
};

struct CameraCorruption {
  double position_noise = 0.0;     // sigma, meters
  double orientation_noise = 0.0;  // sigma per axis, radians
  double outlier_rate = 0.0;
  double outlier_magnitude = 5.0;  // meters
  double dropout_rate = 0.0;
};

struct SceneSpec {
  double spacing = 0.02;
  double min_size = 20.0;  // the grid is at least this wide in x and y
  double margin = 2.0;     // around the walked path
  bool footprints = true;  // add the exact sole markers of every stance
};

/// Parameters of a synthetic capture. A speed of zero gives a standing
/// subject with both feet planted.
struct SimSpec {
  PathType path = PathType::line;
  double radius = 6.0;           // circle
  std::vector<Vec2> waypoints;   // polyline, meters
  double speed = 1.0;            // m/s
  double duration = 10.0;        // seconds
  double rate_hz = 30.0;
  double pelvis_height = 0.82;   // meters, before scaling
  double camera_tilt = 0.2;      // downward pitch of the camera, radians
  double scale = 1.0;
  GaitSpec gait;
  ImuCorruption imu;
  CameraCorruption camera;
  SceneSpec scene;
  uint64_t seed = 1;

  int num_frames() const { return static_cast<int>(std::llround(duration * rate_hz)) + 1; }
  bool standing() const { return speed == 0.0; }

  void validate() const {
    auto finite_nonneg = [](double v, const char* what) {
      if (!std::isfinite(v) || v < 0.0) throw Error(Errc::invalid_argument, std::string(what) + " must be >= 0");
    };
    auto probability = [](double v, const char* what) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::invalid_argument, std::string(what) + " must be in [0, 1]");
    };
    if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw Error(Errc::invalid_argument, "rate_hz must be > 0");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw Error(Errc::invalid_argument, "duration must be > 0");
    finite_nonneg(speed, "speed");
    if (!(scale > 0.0)) throw Error(Errc::invalid_argument, "scale must be > 0");
    if (!(pelvis_height > 0.0)) throw Error(Errc::invalid_argument, "pelvis_height must be > 0");
    if (path == PathType::circle && !(radius > 0.0)) throw Error(Errc::invalid_argument, "circle radius must be > 0");
    if (path == PathType::waypoints) {
      if (waypoints.size() < 2) throw Error(Errc::invalid_argument, "a waypoint path needs at least 2 points");
      for (size_t i = 1; i < waypoints.size(); ++i) {
        if (!((waypoints[i] - waypoints[i - 1]).norm() > 0.0)) {
          throw Error(Errc::invalid_argument, "consecutive waypoints must differ");
        }
      }
    }
    if (!(gait.step_period > 0.0)) throw Error(Errc::invalid_argument, "gait.step_period must be > 0");
    finite_nonneg(gait.clearance, "gait.clearance");
    if (!std::isfinite(imu.yaw_drift)) throw Error(Errc::invalid_argument, "imu.yaw_drift must be finite");
    finite_nonneg(imu.translation_drift, "imu.translation_drift");
    finite_nonneg(imu.articulation_noise, "imu.articulation_noise");
    if (!std::isfinite(imu.frame_yaw)) throw Error(Errc::invalid_argument, "imu.frame_yaw must be finite");
    finite_nonneg(camera.position_noise, "camera.position_noise");
    finite_nonneg(camera.orientation_noise, "camera.orientation_noise");
    finite_nonneg(camera.outlier_magnitude, "camera.outlier_magnitude");
    probability(camera.outlier_rate, "camera.outlier_rate");
    probability(camera.dropout_rate, "camera.dropout_rate");
    if (!(scene.spacing > 0.0)) throw Error(Errc::invalid_argument, "scene.spacing must be > 0");
    finite_nonneg(scene.min_size, "scene.min_size");
    finite_nonneg(scene.margin, "scene.margin");
    if (!standing()) {
      const int cycle = cycle_frames();
      const int swing = cycle - stance_frames();
      if (swing < 2) throw Error(Errc::invalid_argument, "gait cycle too short for the frame rate");
      // The first swing frame must clear the contact height threshold.
      if (gait.clearance * scale * std::sin(kPi / (swing + 1)) < 1e-3) {
        throw Error(Errc::invalid_argument, "gait.clearance too small to separate swing from stance");
      }
    }
  }

  int cycle_frames() const { return std::max(2, static_cast<int>(std::lround(2.0 * gait.step_period * rate_hz))); }
  int stance_frames() const { return static_cast<int>(std::lround(0.6 * cycle_frames())); }
};

enum class CameraLabel : uint8_t { clean, outlier, dropout };

struct SimBundle {
  Sequence truth;      // theta_imu/t_imu hold the ground-truth pose, camera exact
  Sequence corrupted;  // what the sensors report
  ScenePointCloud scene;
  std::vector<CameraLabel> camera_labels;
  Skeleton skeleton;
};

// ---------------------------------------------------------------------------

namespace sim {

/// Arc-length parameterised walking path in the ground plane. Beyond its
/// ends the path continues straight.
class Path {
 public:
  explicit Path(const SimSpec& s) : type_(s.path), radius_(s.radius), pts_(s.waypoints) {
    if (type_ == PathType::waypoints) {
      cum_.push_back(0.0);
      for (size_t i = 1; i < pts_.size(); ++i) cum_.push_back(cum_.back() + (pts_[i] - pts_[i - 1]).norm());
    }
  }

  Vec2 point(double s) const {
    switch (type_) {
      case PathType::line:
        return {s, 0.0};
      case PathType::circle:
        if (s < 0.0) return {s, 0.0};
        return {radius_ * std::sin(s / radius_), radius_ - radius_ * std::cos(s / radius_)};
      case PathType::waypoints: {
        if (s <= 0.0) return pts_[0] + s * (pts_[1] - pts_[0]).normalized();
        const size_t n = pts_.size();
        if (s >= cum_.back()) return pts_[n - 1] + (s - cum_.back()) * (pts_[n - 1] - pts_[n - 2]).normalized();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
        const auto i = static_cast<size_t>(it - cum_.begin());
        const double u = (s - cum_[i - 1]) / (cum_[i] - cum_[i - 1]);
        return (1.0 - u) * pts_[i - 1] + u * pts_[i];
      }
    }
    return {0.0, 0.0};
  }

  double heading(double s) const {
    const Vec2 d = point(s + 0.3) - point(s - 0.3);
    return std::atan2(d.y(), d.x());
  }

 private:
  PathType type_;
  double radius_;
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

struct FootPlacement {
  Vec3 ankle;    // world position of the ankle joint
  double yaw;    // heading of the foot
};

/// Analytic two-bone inverse kinematics of one leg. Writes hip, knee, ankle
/// and foot local rotations into `theta`.
inline void solve_leg(const Skeleton& sk, PoseVector& theta, const Mat3& pelvis, const Vec3& pelvis_pos, int hip,
                      int knee, int ankle, int foot, const FootPlacement& target) {
  const double s = sk.scale();
  const Vec3 hip_pos = pelvis_pos + pelvis * (s * sk.joint(hip).offset);
  const double l1 = s * sk.joint(knee).offset.norm();
  const double l2 = s * sk.joint(ankle).offset.norm();
  const Vec3 d = target.ankle - hip_pos;
  const double dn = d.norm();
  if (dn > l1 + l2 - 1e-9 || dn < std::abs(l1 - l2) + 1e-9) {
    throw Error(Errc::invalid_argument, "foot placement out of leg reach; lower speed or pelvis height");
  }
  const double kappa = std::acos(std::clamp((dn * dn - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0));
  const Mat3 knee_rot = so3::rot_y(kappa);
  const Vec3 a_local = Vec3(0.0, 0.0, -l1) + knee_rot * Vec3(0.0, 0.0, -l2);

  const Mat3 foot_rot = so3::rot_z(target.yaw);
  const Vec3 e = d / dn;
  Vec3 lateral = foot_rot.col(1);
  lateral = (lateral - lateral.dot(e) * e).normalized();
  Mat3 world;
  world << e, lateral, e.cross(lateral);
  const Vec3 al = a_local.normalized();
  Mat3 local;
  local << al, Vec3::UnitY(), al.cross(Vec3::UnitY());
  const Mat3 thigh = world * local.transpose();

  theta.segment<3>(3 * hip) = so3::log(pelvis.transpose() * thigh);
  theta.segment<3>(3 * knee) = Vec3(0.0, kappa, 0.0);
  theta.segment<3>(3 * ankle) = so3::log((thigh * knee_rot).transpose() * foot_rot);
  theta.segment<3>(3 * foot).setZero();
}

inline double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

/// Seeded generator for one frame and one stream; independent of the order
/// in which frames are generated.
inline std::mt19937_64 frame_rng(uint64_t seed, uint64_t frame, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(frame),
                    static_cast<uint32_t>(frame >> 32), static_cast<uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

/// Camera mount: camera z looks along body x, camera x to the body's right,
/// camera y down, pitched down by `tilt`.
inline Mat3 camera_mount(double tilt) { return so3::rot_y(tilt) * optical_axes(); }

/// Height of the sole below the ankle at rest.
inline double sole_drop(const Skeleton& sk) {
  const JointTransforms fk = forward_kinematics(sk, BodyPose{});
  const double ankle_z = fk.position[7].z();
  double lowest = ankle_z;
  for (int k = 0; k < kNumFootParts; ++k) {
    for (const Vec3& m : foot_points(sk, fk, static_cast<FootPart>(k))) lowest = std::min(lowest, m.z());
  }
  return ankle_z - lowest;
}

}  // namespace sim

/// Clean ground-truth poses and per-frame contacts of the synthetic subject.
struct CleanMotion {
  std::vector<BodyPose> poses;
  std::vector<ContactFlags> contacts;
  std::vector<std::vector<Vec3>> footprints;  // sole markers of every stance, once each
};

/// Contact flags recomputed from geometry: a part is in contact when all of
/// its markers are within 1 mm of the ground plane and moved less than 1 cm
/// horizontally since the previous frame (the next frame for frame 0).
inline std::vector<ContactFlags> contacts_from_geometry(const Skeleton& sk, std::span<const BodyPose> poses,
                                                        double ground_z = 0.0) {
  const size_t n = poses.size();
  std::vector<std::array<std::vector<Vec3>, kNumFootParts>> pts(n);
  for (size_t j = 0; j < n; ++j) {
    const JointTransforms fk = forward_kinematics(sk, poses[j]);
    for (int k = 0; k < kNumFootParts; ++k) pts[j][static_cast<size_t>(k)] = foot_points(sk, fk, static_cast<FootPart>(k));
  }
  std::vector<ContactFlags> out(n);
  for (size_t j = 0; j < n; ++j) {
    const size_t other = j == 0 ? std::min<size_t>(1, n - 1) : j - 1;
    for (size_t k = 0; k < static_cast<size_t>(kNumFootParts); ++k) {
      bool c = true;
      for (size_t m = 0; m < pts[j][k].size() && c; ++m) {
        const Vec3& p = pts[j][k][m];
        const Vec3& q = pts[other][k][m];
        c = std::abs(p.z() - ground_z) < 1e-3 && (p - q).head<2>().norm() < 1e-2;
      }
      out[j][k] = c;
    }
  }
  return out;
}

inline CleanMotion generate_motion(const SimSpec& spec, const Skeleton& sk) {
  spec.validate();
  const int n = spec.num_frames();
  const double s = sk.scale();
  const double drop = s * sim::sole_drop(sk);
  const double pelvis_h = s * spec.pelvis_height;
  const sim::Path path(spec);
  const double lateral = s * std::abs(sk.joint(1).offset.y());

  auto time_of = [&](double frame) { return frame / spec.rate_hz; };
  auto pelvis_at = [&](double frame, Mat3& rot, Vec3& pos) {
    const double arc = spec.speed * time_of(frame);
    const Vec2 p = spec.standing() ? Vec2::Zero() : path.point(arc);
    const double yaw = spec.standing() ? 0.0 : path.heading(arc);
    rot = so3::rot_z(yaw);
    pos = Vec3(p.x(), p.y(), pelvis_h);
  };
  auto plant = [&](double frame, double side) {
    Mat3 rot;
    Vec3 pos;
    pelvis_at(frame, rot, pos);
    const Vec3 ankle = pos + rot * Vec3(0.0, side * lateral, 0.0);
    return sim::FootPlacement{Vec3(ankle.x(), ankle.y(), drop), std::atan2(rot(1, 0), rot(0, 0))};
  };

  const int cycle = spec.cycle_frames();
  const int stance = spec.stance_frames();
  const int offsets[2] = {0, cycle / 2};  // left, right

  // Placement of one foot at frame j, and whether it is in stance.
  auto foot_at = [&](int j, int side_idx, bool& in_stance, long& stance_id) {
    const double side = side_idx == 0 ? 1.0 : -1.0;
    if (spec.standing()) {
      in_stance = true;
      stance_id = 0;
      return plant(0.0, side);
    }
    const int shifted = j + offsets[side_idx];
    const long k = static_cast<long>(std::floor(static_cast<double>(shifted) / cycle));
    const int phase = shifted - static_cast<int>(k) * cycle;
    auto stance_mid = [&](long kk) {
      return static_cast<double>(kk * cycle - offsets[side_idx]) + 0.5 * (stance - 1);
    };
    if (phase < stance) {
      in_stance = true;
      stance_id = k;
      return plant(stance_mid(k), side);
    }
    in_stance = false;
    stance_id = k;
    const sim::FootPlacement a = plant(stance_mid(k), side);
    const sim::FootPlacement b = plant(stance_mid(k + 1), side);
    const double u = static_cast<double>(phase - (stance - 1)) / static_cast<double>(cycle - stance + 1);
    const double h = sim::smoothstep(u);
    sim::FootPlacement f;
    f.ankle = (1.0 - h) * a.ankle + h * b.ankle;
    f.ankle.z() = drop + spec.gait.clearance * s * std::sin(kPi * u);
    double dyaw = b.yaw - a.yaw;
    dyaw = std::atan2(std::sin(dyaw), std::cos(dyaw));
    f.yaw = a.yaw + h * dyaw;
    return f;
  };

  CleanMotion out;
  out.poses.resize(static_cast<size_t>(n));
  std::vector<std::pair<int, int>> stance_starts;  // (side, frame)
  std::array<long, 2> last_stance = {std::numeric_limits<long>::min(), std::numeric_limits<long>::min()};
  const Mat3 arm_down_l = so3::rot_x(-1.3);
  const Mat3 arm_down_r = so3::rot_x(1.3);
  for (int j = 0; j < n; ++j) {
    BodyPose& p = out.poses[static_cast<size_t>(j)];
    Mat3 rot;
    Vec3 pos;
    pelvis_at(j, rot, pos);
    p.theta.head<3>() = so3::log(rot);
    p.trans = pos - rot * (s * sk.joint(0).offset);
    const Vec3 root_pos = pos;

    const int legs[2][4] = {{1, 4, 7, 10}, {2, 5, 8, 11}};
    for (int side = 0; side < 2; ++side) {
      bool in_stance = false;
      long id = 0;
      const sim::FootPlacement f = foot_at(j, side, in_stance, id);
      sim::solve_leg(sk, p.theta, rot, root_pos, legs[side][0], legs[side][1], legs[side][2], legs[side][3], f);
      if (in_stance && id != last_stance[static_cast<size_t>(side)]) {
        last_stance[static_cast<size_t>(side)] = id;
        stance_starts.emplace_back(side, j);
      }
    }
    const double swing = spec.standing() ? 0.0 : 0.3 * std::sin(2.0 * kPi * j / cycle);
    p.theta.segment<3>(3 * 16) = so3::log(so3::rot_y(swing) * arm_down_l);
    p.theta.segment<3>(3 * 17) = so3::log(so3::rot_y(-swing) * arm_down_r);
  }

  for (const auto& [side, j] : stance_starts) {
    auto& fp = out.footprints.emplace_back();
    const JointTransforms fk = forward_kinematics(sk, out.poses[static_cast<size_t>(j)]);
    for (FootPart k : side == 0 ? std::array{FootPart::left_toe, FootPart::left_heel}
                                : std::array{FootPart::right_toe, FootPart::right_heel}) {
      for (const Vec3& m : foot_points(sk, fk, k)) fp.push_back(m);
    }
  }
  out.contacts = contacts_from_geometry(sk, out.poses);
  return out;
}

/// Per-frame contact flags of the clean motion.
inline std::vector<ContactFlags> contact_schedule(const SimSpec& spec, const Skeleton& sk = Skeleton::smpl_default()) {
  return generate_motion(spec, sk.with_scale(spec.scale)).contacts;
}

inline ScenePointCloud simulated_scene(const SimSpec& spec, const CleanMotion& motion) {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  for (const BodyPose& p : motion.poses) {
    x0 = std::min(x0, p.trans.x());
    x1 = std::max(x1, p.trans.x());
    y0 = std::min(y0, p.trans.y());
    y1 = std::max(y1, p.trans.y());
  }
  x0 -= spec.scene.margin;
  x1 += spec.scene.margin;
  y0 -= spec.scene.margin;
  y1 += spec.scene.margin;
  auto grow = [&](double& lo, double& hi) {
    if (hi - lo < spec.scene.min_size) {
      const double c = 0.5 * (lo + hi);
      lo = c - 0.5 * spec.scene.min_size;
      hi = c + 0.5 * spec.scene.min_size;
    }
  };
  grow(x0, x1);
  grow(y0, y1);
  // Snap to the spacing so grids of different extents share nodes.
  const double sp = spec.scene.spacing;
  x0 = std::floor(x0 / sp) * sp;
  y0 = std::floor(y0 / sp) * sp;
  ScenePointCloud cloud = make_plane_grid(x0, y0, x1 - x0, y1 - y0, sp);
  if (spec.scene.footprints) {
    for (const auto& fp : motion.footprints) {
      for (const Vec3& m : fp) {
        cloud.points.push_back(m);
        cloud.normals.emplace_back(0.0, 0.0, 1.0);
      }
    }
  }
  return cloud;
}

/// Applies IMU drift and noise. Each corruption is skipped entirely when its
/// parameter is zero, so a zero spec returns the input unchanged.
inline void corrupt_imu(const SimSpec& spec, std::vector<Frame>& frames) {
  const ImuCorruption& c = spec.imu;
  const size_t n = frames.size();
  if (c.yaw_drift != 0.0) {
    std::vector<Vec3> clean(n);
    for (size_t j = 0; j < n; ++j) clean[j] = frames[j].t_imu;
    for (size_t j = 0; j < n; ++j) {
      const Mat3 e = so3::rot_z(c.yaw_drift * frames[j].timestamp);
      frames[j].theta_imu.head<3>() = so3::log(e * so3::exp(frames[j].theta_imu.head<3>()));
      if (j > 0) frames[j].t_imu = frames[j - 1].t_imu + e * (clean[j] - clean[j - 1]);
    }
  }
  if (c.translation_drift != 0.0) {
    auto rng = sim::frame_rng(spec.seed, 0, 0x7d);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    const double a = ang(rng);
    const Vec3 dir(std::cos(a), std::sin(a), 0.0);
    for (Frame& f : frames) f.t_imu += c.translation_drift * f.timestamp * dir;
  }
  if (c.articulation_noise != 0.0) {
    for (size_t j = 0; j < n; ++j) {
      auto rng = sim::frame_rng(spec.seed, j, 0x1a);
      std::normal_distribution<double> g(0.0, c.articulation_noise);
      for (int i = 3; i < kPoseDim; ++i) frames[j].theta_imu[i] += g(rng);
    }
  }
  if (c.frame_yaw != 0.0) {
    const Mat3 r = so3::rot_z(c.frame_yaw);
    for (Frame& f : frames) {
      f.theta_imu.head<3>() = so3::log(r * so3::exp(f.theta_imu.head<3>()));
      f.t_imu = r * f.t_imu;
    }
  }
}

/// Independent per-frame camera corruption: dropout, then outliers, then
/// Gaussian noise on the remaining frames.
inline std::vector<CameraLabel> corrupt_camera(const SimSpec& spec, std::vector<Frame>& frames) {
  const CameraCorruption& c = spec.camera;
  std::vector<CameraLabel> labels(frames.size(), CameraLabel::clean);
  for (size_t j = 0; j < frames.size(); ++j) {
    if (!frames[j].camera) continue;
    auto rng = sim::frame_rng(spec.seed, j, 0xca);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u_drop = uni(rng);
    const double u_out = uni(rng);
    CameraObservation& cam = *frames[j].camera;
    if (c.dropout_rate > 0.0 && u_drop < c.dropout_rate) {
      frames[j].camera.reset();
      labels[j] = CameraLabel::dropout;
      continue;
    }
    if (c.outlier_rate > 0.0 && u_out < c.outlier_rate) {
      cam.t += c.outlier_magnitude * sim::random_unit(rng);
      const double angle = uni(rng) * kPi;
      cam.R = Rotation::unchecked(cam.R.matrix() * so3::exp(angle * sim::random_unit(rng)));
      labels[j] = CameraLabel::outlier;
      continue;
    }
    if (c.position_noise > 0.0) {
      std::normal_distribution<double> g(0.0, c.position_noise);
      cam.t += Vec3(g(rng), g(rng), g(rng));
    }
    if (c.orientation_noise > 0.0) {
      std::normal_distribution<double> g(0.0, c.orientation_noise);
      cam.R = Rotation::unchecked(cam.R.matrix() * so3::exp(Vec3(g(rng), g(rng), g(rng))));
    }
  }
  return labels;
}

inline SimBundle generate(const SimSpec& spec, const Skeleton& base = Skeleton::smpl_default()) {
  spec.validate();
  SimBundle b;
  b.skeleton = base.with_scale(spec.scale);
  const Skeleton& sk = b.skeleton;
  const CleanMotion motion = generate_motion(spec, sk);
  const Mat3 mount = sim::camera_mount(spec.camera_tilt);
  b.truth.rate_hz = spec.rate_hz;
  b.truth.scale = spec.scale;
  b.truth.frames.resize(motion.poses.size());
  for (size_t j = 0; j < motion.poses.size(); ++j) {
    Frame& f = b.truth.frames[j];
    const BodyPose& p = motion.poses[j];
    f.timestamp = static_cast<double>(j) / spec.rate_hz;
    f.theta_imu = p.theta;
    f.t_imu = p.trans;
    f.contacts = motion.contacts[j];
    const JointTransforms fk = forward_kinematics(sk, p);
    const auto h = static_cast<size_t>(sk.head_joint());
    f.camera = CameraObservation{Rotation::unchecked(fk.rotation[h] * mount), fk.position[h]};
  }
  b.corrupted = b.truth;
  corrupt_imu(spec, b.corrupted.frames);
  b.camera_labels = corrupt_camera(spec, b.corrupted.frames);
  b.scene = simulated_scene(spec, motion);
  return b;
}

// ---------------------------------------------------------------------------
// SimSpec JSON. Every key is optional; see SimSpec for defaults.

inline SimSpec sim_spec_from_json(const nlohmann::json& j) {
  SimSpec s;
  try {
    auto get = [](const nlohmann::json& src, const char* key, auto& dst) {
      if (src.contains(key)) dst = src.at(key).get<std::decay_t<decltype(dst)>>();
    };
    if (j.contains("path")) {
      const auto& p = j.at("path");
      const std::string type = p.at("type").get<std::string>();
      if (type == "line") {
        s.path = PathType::line;
      } else if (type == "circle") {
        s.path = PathType::circle;
        get(p, "radius", s.radius);
      } else if (type == "waypoints") {
        s.path = PathType::waypoints;
        for (const auto& w : p.at("points")) s.waypoints.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
      } else {
        throw Error(Errc::parse_schema, "unknown path type '" + type + "'");
      }
    }
    get(j, "speed", s.speed);
    get(j, "duration", s.duration);
    get(j, "rate_hz", s.rate_hz);
    get(j, "pelvis_height", s.pelvis_height);
    get(j, "camera_tilt", s.camera_tilt);
    get(j, "scale", s.scale);
    get(j, "seed", s.seed);
    if (j.contains("gait")) {
      get(j["gait"], "step_period", s.gait.step_period);
      get(j["gait"], "clearance", s.gait.clearance);
    }
    if (j.contains("imu")) {
      const auto& c = j["imu"];
      get(c, "yaw_drift", s.imu.yaw_drift);
      get(c, "translation_drift", s.imu.translation_drift);
      get(c, "articulation_noise", s.imu.articulation_noise);
      get(c, "frame_yaw", s.imu.frame_yaw);
    }
    if (j.contains("camera")) {
      const auto& c = j["camera"];
      get(c, "position_noise", s.camera.position_noise);
      get(c, "orientation_noise", s.camera.orientation_noise);
      get(c, "outlier_rate", s.camera.outlier_rate);
      get(c, "outlier_magnitude", s.camera.outlier_magnitude);
      get(c, "dropout_rate", s.camera.dropout_rate);
    }
    if (j.contains("scene")) {
      const auto& c = j["scene"];
      get(c, "spacing", s.scene.spacing);
      get(c, "min_size", s.scene.min_size);
      get(c, "margin", s.scene.margin);
      get(c, "footprints", s.scene.footprints);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, std::string("sim spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline SimSpec load_sim_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open sim spec '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, "sim spec '" + path + "': " + e.what());
  }
  return sim_spec_from_json(j);
}

/// Writes truth.jsonl, sequence.jsonl and scene.json into `dir`.
inline void save_bundle(const SimBundle& b, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  save_sequence(b.truth, (d / "truth.jsonl").string());
  save_sequence(b.corrupted, (d / "sequence.jsonl").string());
  save_scene_json(b.scene, (d / "scene.json").string());
}

}  // namespace egofuse
