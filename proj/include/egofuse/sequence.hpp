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
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egofuse/kinematics.hpp"
#include "egofuse/localization.hpp"

namespace egofuse {

using ContactFlags = std::array<bool, kNumFootParts>;

/// Optical camera axes (x right, y down, z forward) expressed in the body
/// axes (x forward, y left, z up). An optical orientation R maps to the body
/// convention as R * optical_axes().transpose().
inline Mat3 optical_axes() {
  Mat3 m;
  m.col(0) = Vec3(0.0, -1.0, 0.0);
  m.col(1) = Vec3(0.0, 0.0, -1.0);
  m.col(2) = Vec3(1.0, 0.0, 0.0);
  return m;
}

struct CameraObservation {
  Rotation R;  // camera-to-scene orientation
  Vec3 t = Vec3::Zero();  // camera center
};

/// One time step of the body-worn sensor stream.
struct Frame {
  double timestamp = 0.0;
  PoseVector theta_imu = PoseVector::Zero();
  Vec3 t_imu = Vec3::Zero();
  ContactFlags contacts{};
  std::optional<CameraObservation> camera;
};

struct Sequence {
  std::vector<Frame> frames;
  double rate_hz = 30.0;
  double scale = 1.0;

  size_t size() const { return frames.size(); }

  void validate() const {
    if (frames.size() < 2) throw Error(Errc::invalid_argument, "sequence needs at least 2 frames");
    if (!(rate_hz > 0.0)) throw Error(Errc::invalid_argument, "sequence rate must be positive");
    const double dt = 1.0 / rate_hz;
    for (size_t i = 0; i < frames.size(); ++i) {
      const Frame& f = frames[i];
      if (!f.theta_imu.allFinite() || !f.t_imu.allFinite() || !std::isfinite(f.timestamp)) {
        throw Error(Errc::parse_non_finite, "frame " + std::to_string(i) + " is not finite");
      }
      if (i > 0 && std::abs(f.timestamp - frames[i - 1].timestamp - dt) > 1e-6) {
        throw Error(Errc::invalid_argument, "frame " + std::to_string(i) + " breaks the uniform timestamp grid");
      }
    }
  }

  /// Camera observations as a trajectory; missing frames are marked invalid.
  CameraTrajectory camera_trajectory() const {
    CameraTrajectory traj;
    traj.rate_hz = rate_hz;
    traj.poses.reserve(frames.size());
    for (const Frame& f : frames) {
      CameraPoseEstimate p;
      p.timestamp = f.timestamp;
      if (f.camera) {
        p.R_C = f.camera->R;
        p.t_C = f.camera->t;
        p.valid = true;
      } else {
        p.valid = false;
      }
      traj.poses.push_back(p);
    }
    return traj;
  }
};

/// Optimised (or baseline) body poses, one per frame.
struct PoseTrack {
  std::vector<double> timestamps;
  std::vector<BodyPose> poses;

  size_t size() const { return poses.size(); }
};

// ---------------------------------------------------------------------------
// Sequence file: JSON lines {timestamp, theta_imu: [72], t_imu: [3],
// contacts: [4 bools], camera: optional {q: [w,x,y,z], t: [3]}}.
// Result file: JSON lines {timestamp, theta: [72], trans: [3]}.

namespace detail {

inline PoseVector json_pose(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != static_cast<size_t>(kPoseDim)) {
    throw Error(Errc::parse_schema, std::string(what) + " must have 72 entries");
  }
  PoseVector v;
  for (int i = 0; i < kPoseDim; ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
  if (!v.allFinite()) throw Error(Errc::parse_non_finite, std::string(what) + " is not finite");
  return v;
}

inline nlohmann::json to_json_array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline double infer_rate(const std::vector<double>& ts) {
  if (ts.size() < 2) return 30.0;
  return static_cast<double>(ts.size() - 1) / (ts.back() - ts.front());
}

}  // namespace detail

inline nlohmann::json frame_to_json(const Frame& f) {
  nlohmann::json j;
  j["timestamp"] = f.timestamp;
  j["theta_imu"] = detail::to_json_array(f.theta_imu);
  j["t_imu"] = detail::to_json_array(f.t_imu);
  j["contacts"] = {f.contacts[0], f.contacts[1], f.contacts[2], f.contacts[3]};
  if (f.camera) {
    const Eigen::Vector4d q = so3::to_quaternion_wxyz(f.camera->R.matrix());
    j["camera"] = {{"q", {q[0], q[1], q[2], q[3]}}, {"t", {f.camera->t.x(), f.camera->t.y(), f.camera->t.z()}}};
  }
  return j;
}

inline Frame frame_from_json(const nlohmann::json& j) {
  Frame f;
  f.timestamp = j.at("timestamp").get<double>();
  f.theta_imu = detail::json_pose(j.at("theta_imu"), "theta_imu");
  f.t_imu = detail::json_fixed<3>(j.at("t_imu"), "t_imu");
  const auto& c = j.at("contacts");
  if (!c.is_array() || c.size() != static_cast<size_t>(kNumFootParts)) {
    throw Error(Errc::parse_schema, "contacts must have 4 entries");
  }
  for (size_t k = 0; k < static_cast<size_t>(kNumFootParts); ++k) f.contacts[k] = c[k].get<bool>();
  if (j.contains("camera") && !j["camera"].is_null()) {
    const auto q = detail::json_fixed<4>(j["camera"].at("q"), "camera.q");
    f.camera = CameraObservation{Rotation::unchecked(so3::from_quaternion_wxyz(q[0], q[1], q[2], q[3])),
                                 detail::json_fixed<3>(j["camera"].at("t"), "camera.t")};
  }
  return f;
}

inline Sequence load_sequence(const std::string& path) {
  Sequence seq;
  detail::for_each_json_line(path, [&](const nlohmann::json& j) { seq.frames.push_back(frame_from_json(j)); });
  std::vector<double> ts;
  for (const auto& f : seq.frames) ts.push_back(f.timestamp);
  seq.rate_hz = detail::infer_rate(ts);
  return seq;
}

inline void save_sequence(const Sequence& seq, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write '" + path + "'");
  for (const auto& f : seq.frames) out << frame_to_json(f).dump() << "\n";
}

inline void save_pose_track(const PoseTrack& track, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write '" + path + "'");
  for (size_t i = 0; i < track.size(); ++i) {
    nlohmann::json j;
    j["timestamp"] = track.timestamps[i];
    j["theta"] = detail::to_json_array(track.poses[i].theta);
    j["trans"] = detail::to_json_array(track.poses[i].trans);
    out << j.dump() << "\n";
  }
}

/// Reads a result file, or a sequence file whose IMU stream is taken as poses
/// (ground-truth sequences are stored that way).
inline PoseTrack load_pose_track(const std::string& path) {
  PoseTrack track;
  detail::for_each_json_line(path, [&](const nlohmann::json& j) {
    BodyPose p;
    if (j.contains("theta")) {
      p.theta = detail::json_pose(j.at("theta"), "theta");
      p.trans = detail::json_fixed<3>(j.at("trans"), "trans");
    } else {
      p.theta = detail::json_pose(j.at("theta_imu"), "theta_imu");
      p.trans = detail::json_fixed<3>(j.at("t_imu"), "t_imu");
    }
    track.timestamps.push_back(j.at("timestamp").get<double>());
    track.poses.push_back(p);
  });
  return track;
}

inline PoseTrack pose_track_from_sequence(const Sequence& seq) {
  PoseTrack track;
  for (const auto& f : seq.frames) {
    track.timestamps.push_back(f.timestamp);
    track.poses.push_back({f.theta_imu, f.t_imu});
  }
  return track;
}

}  // namespace egofuse
