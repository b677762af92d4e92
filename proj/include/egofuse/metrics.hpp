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

#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egofuse/kinematics.hpp"
#include "egofuse/scene.hpp"
#include "egofuse/sequence.hpp"

namespace egofuse {

/// Bidirectional Chamfer distance in centimeters: the mean of the two mean
/// nearest-neighbour distances. No alignment is applied.
inline double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error(Errc::empty_input, "chamfer needs two non-empty point sets");
  auto one_way = [](std::span<const Vec3> from, std::span<const Vec3> to) {
    const SceneIndex idx(ScenePointCloud{{to.begin(), to.end()}, {}});
    double sum = 0.0;
    for (const Vec3& p : from) sum += idx.closest_point(p).distance;
    return sum / static_cast<double>(from.size());
  };
  return 100.0 * 0.5 * (one_way(a, b) + one_way(b, a));
}

/// The 24 joints and all foot markers of a pose.
inline std::vector<Vec3> body_points(const Skeleton& sk, const BodyPose& p) {
  const JointTransforms fk = forward_kinematics(sk, p);
  std::vector<Vec3> out(fk.position.begin(), fk.position.end());
  for (int k = 0; k < kNumFootParts; ++k) {
    for (const Vec3& m : foot_points(sk, fk, static_cast<FootPart>(k))) out.push_back(m);
  }
  return out;
}

/// Per-frame body-point Chamfer distance averaged over frames, centimeters.
inline double sequence_chamfer(const Skeleton& sk, std::span<const BodyPose> result, std::span<const BodyPose> truth) {
  if (result.size() != truth.size()) throw Error(Errc::dimension_mismatch, "result and truth lengths differ");
  if (result.empty()) throw Error(Errc::empty_input, "no frames to compare");
  double sum = 0.0;
  for (size_t j = 0; j < result.size(); ++j) {
    const auto a = body_points(sk, result[j]);
    const auto b = body_points(sk, truth[j]);
    sum += chamfer(a, b);
  }
  return sum / static_cast<double>(result.size());
}

struct FootMetrics {
  std::optional<double> dist_to_surface_cm;  // absent when nothing is in contact
  std::optional<double> sliding_cm;          // absent without consecutive contacts
};

/// Distance of contact-flagged markers to the scene, and their displacement
/// in the ground plane between consecutive frames that are both in contact.
/// With scene normals the distance is measured to the tangent plane of the
/// nearest point; otherwise it is the Euclidean distance to that point.
/// Scenes are z-up, so the ground plane is xy.
inline FootMetrics foot_metrics(const Skeleton& sk, std::span<const BodyPose> poses,
                                std::span<const ContactFlags> contacts, const ScenePointCloud& cloud,
                                const SceneIndex& index) {
  if (poses.size() != contacts.size()) throw Error(Errc::dimension_mismatch, "poses and contacts lengths differ");
  double dist_sum = 0.0;
  size_t dist_n = 0;
  double slide_sum = 0.0;
  size_t slide_n = 0;
  std::array<std::vector<Vec3>, kNumFootParts> prev;
  for (size_t j = 0; j < poses.size(); ++j) {
    const JointTransforms fk = forward_kinematics(sk, poses[j]);
    for (size_t k = 0; k < static_cast<size_t>(kNumFootParts); ++k) {
      auto pts = foot_points(sk, fk, static_cast<FootPart>(k));
      if (contacts[j][k]) {
        for (const Vec3& m : pts) {
          const NearestPoint np = index.closest_point(m);
          dist_sum += cloud.has_normals() ? std::abs(cloud.normals[np.index].dot(m - np.point)) : np.distance;
          ++dist_n;
        }
        if (j > 0 && contacts[j - 1][k]) {
          for (size_t n = 0; n < pts.size(); ++n) {
            slide_sum += (pts[n] - prev[k][n]).head<2>().norm();
            ++slide_n;
          }
        }
      }
      prev[k] = std::move(pts);
    }
  }
  FootMetrics out;
  if (dist_n > 0) out.dist_to_surface_cm = 100.0 * dist_sum / static_cast<double>(dist_n);
  if (slide_n > 0) out.sliding_cm = 100.0 * slide_sum / static_cast<double>(slide_n);
  return out;
}

struct DriftPoint {
  double distance_m = 0.0;
  double error_cm = 0.0;
};

inline const std::vector<double>& default_milestones() {
  static const std::vector<double> m = {0.0, 70.0, 200.0, 380.0};
  return m;
}

/// Cumulative ground-truth root path length per frame.
inline std::vector<double> travelled_distance(std::span<const BodyPose> truth) {
  std::vector<double> d(truth.size(), 0.0);
  for (size_t j = 1; j < truth.size(); ++j) d[j] = d[j - 1] + (truth[j].trans - truth[j - 1].trans).norm();
  return d;
}

/// Root-position error against distance travelled. Each milestone m reports
/// the mean error over frames whose travelled distance lies within
/// [m - window/2, m + window/2], or the nearest frame if none does.
/// Milestones beyond the path length are skipped.
inline std::vector<DriftPoint> drift_curve(std::span<const BodyPose> result, std::span<const BodyPose> truth,
                                           const std::vector<double>& milestones = default_milestones(),
                                           double window = 2.0) {
  if (result.size() != truth.size()) throw Error(Errc::dimension_mismatch, "result and truth lengths differ");
  if (truth.empty()) throw Error(Errc::empty_input, "no frames to compare");
  const auto dist = travelled_distance(truth);
  std::vector<double> err(truth.size());
  for (size_t j = 0; j < truth.size(); ++j) err[j] = 100.0 * (result[j].trans - truth[j].trans).norm();
  std::vector<double> ms = milestones;
  std::sort(ms.begin(), ms.end());
  std::vector<DriftPoint> out;
  for (double m : ms) {
    if (m > dist.back() + 1e-9) continue;
    double sum = 0.0;
    size_t n = 0;
    size_t nearest = 0;
    for (size_t j = 0; j < dist.size(); ++j) {
      if (std::abs(dist[j] - m) <= 0.5 * window) {
        sum += err[j];
        ++n;
      }
      if (std::abs(dist[j] - m) < std::abs(dist[nearest] - m)) nearest = j;
    }
    out.push_back({m, n > 0 ? sum / static_cast<double>(n) : err[nearest]});
  }
  return out;
}

inline double root_rmse_cm(std::span<const BodyPose> result, std::span<const BodyPose> truth) {
  if (result.size() != truth.size() || result.empty()) throw Error(Errc::dimension_mismatch, "length mismatch");
  double s = 0.0;
  for (size_t j = 0; j < result.size(); ++j) s += (result[j].trans - truth[j].trans).squaredNorm();
  return 100.0 * std::sqrt(s / static_cast<double>(result.size()));
}

struct MetricsReport {
  double chamfer_cm = 0.0;
  double root_rmse_cm = 0.0;
  std::optional<double> dist_to_surface_cm;
  std::optional<double> foot_sliding_cm;
  std::vector<DriftPoint> drift_curve;
  std::map<std::string, double> timings_s;
};

inline nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["chamfer_cm"] = r.chamfer_cm;
  j["root_rmse_cm"] = r.root_rmse_cm;
  j["dist_to_surface_cm"] = r.dist_to_surface_cm ? nlohmann::json(*r.dist_to_surface_cm) : nlohmann::json(nullptr);
  j["foot_sliding_cm"] = r.foot_sliding_cm ? nlohmann::json(*r.foot_sliding_cm) : nlohmann::json(nullptr);
  j["drift_curve"] = nlohmann::json::array();
  for (const auto& p : r.drift_curve) j["drift_curve"].push_back({{"distance_m", p.distance_m}, {"error_cm", p.error_cm}});
  j["timings_s"] = r.timings_s;
  return j;
}

inline void save_drift_csv(const std::vector<DriftPoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write '" + path + "'");
  out << "distance_m,error_cm\n";
  out.precision(10);
  for (const auto& p : curve) out << p.distance_m << ',' << p.error_cm << '\n';
}

/// Report for a result track against ground truth. Contact flags come from
/// the ground-truth sequence.
inline MetricsReport evaluate_result(const Skeleton& sk, const PoseTrack& result, const Sequence& truth,
                                     const ScenePointCloud& cloud, const SceneIndex& index,
                                     const std::vector<double>& milestones = default_milestones()) {
  if (result.size() != truth.size()) {
    throw Error(Errc::dimension_mismatch, "result has " + std::to_string(result.size()) + " frames, truth has " +
                                              std::to_string(truth.size()));
  }
  const PoseTrack gt = pose_track_from_sequence(truth);
  std::vector<ContactFlags> contacts;
  for (const Frame& f : truth.frames) contacts.push_back(f.contacts);
  MetricsReport r;
  r.chamfer_cm = sequence_chamfer(sk, result.poses, gt.poses);
  r.root_rmse_cm = root_rmse_cm(result.poses, gt.poses);
  const FootMetrics fm = foot_metrics(sk, result.poses, contacts, cloud, index);
  r.dist_to_surface_cm = fm.dist_to_surface_cm;
  r.foot_sliding_cm = fm.sliding_cm;
  r.drift_curve = drift_curve(result.poses, gt.poses, milestones);
  return r;
}

}  // namespace egofuse
