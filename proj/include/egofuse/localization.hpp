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
#include <complex>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "egofuse/rotation.hpp"

namespace egofuse {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) ||
        !std::isfinite(cy)) {
      throw Error(Errc::invalid_argument, "intrinsics need finite fx, fy > 0 and finite cx, cy");
    }
  }

  Vec3 bearing(const Vec2& px) const { return Vec3((px.x() - cx) / fx, (px.y() - cy) / fy, 1.0).normalized(); }
};

struct Correspondence {
  Vec2 pixel = Vec2::Zero();
  Vec3 world = Vec3::Zero();
};

/// Camera orientation (camera-to-scene) and center in the scene frame.
/// Camera axes: x right, y down, z along the optical axis.
struct CameraPoseEstimate {
  Rotation R_C;
  Vec3 t_C = Vec3::Zero();
  double timestamp = 0.0;
  bool valid = true;

  Vec3 to_camera(const Vec3& x) const { return R_C.matrix().transpose() * (x - t_C); }
};

inline std::optional<Vec2> project(const CameraPoseEstimate& pose, const CameraIntrinsics& k, const Vec3& world) {
  const Vec3 c = pose.to_camera(world);
  if (!(c.z() > 0.0)) return std::nullopt;
  return Vec2(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
}

inline double reprojection_error(const CameraPoseEstimate& pose, const CameraIntrinsics& k,
                                 const Correspondence& c) {
  const auto px = project(pose, k, c.world);
  return px ? (*px - c.pixel).norm() : std::numeric_limits<double>::infinity();
}

namespace detail {

// Real roots of a4 x^4 + ... + a0 via the eigenvalues of the companion matrix,
// each polished by Newton iterations.
inline std::vector<double> solve_quartic(const std::array<double, 5>& a, double imag_tol = 1e-9) {
  std::vector<double> roots;
  if (std::abs(a[4]) < 1e-300) return roots;
  Eigen::Matrix4d comp = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) comp(0, i) = -a[static_cast<size_t>(3 - i)] / a[4];
  comp(1, 0) = 1.0;
  comp(2, 1) = 1.0;
  comp(3, 2) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix4d> es(comp, false);
  if (es.info() != Eigen::Success) return roots;
  for (int i = 0; i < 4; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > imag_tol * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 4; ++it) {
      const double f = (((a[4] * x + a[3]) * x + a[2]) * x + a[1]) * x + a[0];
      const double df = ((4.0 * a[4] * x + 3.0 * a[3]) * x + 2.0 * a[2]) * x + a[1];
      if (df == 0.0) break;
      x -= f / df;
    }
    roots.push_back(x);
  }
  return roots;
}

}  // namespace detail

/// Minimal absolute pose from three 2D-3D correspondences. Direct
/// parameterisation through intermediate camera and world frames, reducing to
/// a quartic in the cosine of the angle between the two frames' planes.
/// Returns every real solution with all three points in front of the camera
/// and consistent with all three bearings.
inline std::vector<CameraPoseEstimate> p3p_solve(std::span<const Correspondence> c, const CameraIntrinsics& k) {
  if (c.size() != 3) throw Error(Errc::invalid_argument, "p3p needs exactly 3 correspondences");
  k.validate();
  Vec3 P1 = c[0].world;
  Vec3 P2 = c[1].world;
  const Vec3 P3 = c[2].world;
  Vec3 f1 = k.bearing(c[0].pixel);
  Vec3 f2 = k.bearing(c[1].pixel);
  const Vec3 f3 = k.bearing(c[2].pixel);

  const double extent = std::max({(P2 - P1).norm(), (P3 - P1).norm(), (P3 - P2).norm()});
  if (!(extent > 0.0) || (P2 - P1).cross(P3 - P1).norm() <= 1e-10 * extent * extent) {
    throw Error(Errc::degenerate_configuration, "world points are collinear or coincident");
  }
  if (f1.cross(f2).norm() < 1e-12 || f1.cross(f3).norm() < 1e-12 || f2.cross(f3).norm() < 1e-12) {
    throw Error(Errc::degenerate_configuration, "bearing vectors are parallel");
  }

  auto camera_frame = [](const Vec3& a, const Vec3& b) {
    const Vec3 e1 = a;
    const Vec3 e3 = a.cross(b).normalized();
    const Vec3 e2 = e3.cross(e1);
    Mat3 t;
    t.row(0) = e1.transpose();
    t.row(1) = e2.transpose();
    t.row(2) = e3.transpose();
    return t;
  };
  Mat3 T = camera_frame(f1, f2);
  Vec3 f3t = T * f3;
  if (f3t.z() > 0.0) {
    std::swap(f1, f2);
    std::swap(P1, P2);
    T = camera_frame(f1, f2);
    f3t = T * f3;
  }

  const Vec3 n1 = (P2 - P1).normalized();
  const Vec3 n3 = n1.cross(P3 - P1).normalized();
  const Vec3 n2 = n3.cross(n1);
  Mat3 N;
  N.row(0) = n1.transpose();
  N.row(1) = n2.transpose();
  N.row(2) = n3.transpose();
  const Vec3 P3n = N * (P3 - P1);

  const double d12 = (P2 - P1).norm();
  const double phi1 = f3t.x() / f3t.z();
  const double phi2 = f3t.y() / f3t.z();
  const double p1 = P3n.x();
  const double p2 = P3n.y();
  const double cos_beta = f1.dot(f2);
  double b = 1.0 / (1.0 - cos_beta * cos_beta) - 1.0;
  b = cos_beta < 0.0 ? -std::sqrt(b) : std::sqrt(b);

  const double phi1_2 = phi1 * phi1;
  const double phi2_2 = phi2 * phi2;
  const double p1_2 = p1 * p1;
  const double p1_3 = p1_2 * p1;
  const double p1_4 = p1_3 * p1;
  const double p2_2 = p2 * p2;
  const double p2_3 = p2_2 * p2;
  const double p2_4 = p2_3 * p2;
  const double d12_2 = d12 * d12;
  const double b_2 = b * b;

  std::array<double, 5> a;
  a[4] = -phi2_2 * p2_4 - p2_4 * phi1_2 - p2_4;
  a[3] = 2.0 * p2_3 * d12 * b + 2.0 * phi2_2 * p2_3 * d12 * b - 2.0 * phi2 * p2_3 * phi1 * d12;
  a[2] = -phi2_2 * p2_2 * p1_2 - phi2_2 * p2_2 * d12_2 * b_2 - phi2_2 * p2_2 * d12_2 + phi2_2 * p2_4 +
         p2_4 * phi1_2 + 2.0 * p1 * p2_2 * d12 + 2.0 * phi1 * phi2 * p1 * p2_2 * d12 * b -
         p2_2 * p1_2 * phi1_2 + 2.0 * p1 * p2_2 * phi2_2 * d12 - p2_2 * d12_2 * b_2 - 2.0 * p1_2 * p2_2;
  a[1] = 2.0 * p1_2 * p2 * d12 * b + 2.0 * phi2 * p2_3 * phi1 * d12 - 2.0 * phi2_2 * p2_3 * d12 * b -
         2.0 * p1 * p2 * d12_2 * b;
  a[0] = -2.0 * phi2 * p2_2 * phi1 * p1 * d12 * b + phi2_2 * p2_2 * d12_2 + 2.0 * p1_3 * d12 - p1_2 * d12_2 +
         phi2_2 * p2_2 * p1_2 - p1_4 - 2.0 * phi2_2 * p2_2 * p1 * d12 + p2_2 * phi1_2 * p1_2 +
         phi2_2 * p2_2 * d12_2 * b_2;

  std::vector<CameraPoseEstimate> out;
  for (double cos_theta : detail::solve_quartic(a)) {
    if (cos_theta < -1.0 - 1e-6 || cos_theta > 1.0 + 1e-6) continue;
    cos_theta = std::clamp(cos_theta, -1.0, 1.0);
    const double cot_alpha = (-phi1 * p1 / phi2 - cos_theta * p2 + d12 * b) /
                             (-phi1 * cos_theta * p2 / phi2 + p1 - d12);
    if (!std::isfinite(cot_alpha)) continue;
    const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
    const double sin_alpha = std::sqrt(1.0 / (cot_alpha * cot_alpha + 1.0));
    double cos_alpha = std::sqrt(std::max(0.0, 1.0 - sin_alpha * sin_alpha));
    if (cot_alpha < 0.0) cos_alpha = -cos_alpha;

    const double r = d12 * (sin_alpha * b + cos_alpha);
    Vec3 center(cos_alpha * r, cos_theta * sin_alpha * r, sin_theta * sin_alpha * r);
    center = P1 + N.transpose() * center;

    Mat3 rot;
    rot << -cos_alpha, -sin_alpha * cos_theta, -sin_alpha * sin_theta,
           sin_alpha, -cos_alpha * cos_theta, -cos_alpha * sin_theta,
           0.0, -sin_theta, cos_theta;
    rot = N.transpose() * rot.transpose() * T;
    if (!rot.allFinite() || !center.allFinite()) continue;

    CameraPoseEstimate est;
    est.R_C = Rotation::unchecked(rot);
    est.t_C = center;
    // Degenerate quartic roots (sin theta ~ 0) can satisfy two bearings but
    // not the third; keep only candidates consistent with all three.
    bool ok = true;
    for (const auto& cc : c) {
      const Vec3 x = est.to_camera(cc.world);
      ok = ok && x.z() > 0.0 && (x.normalized() - k.bearing(cc.pixel)).norm() < 1e-6;
    }
    if (ok) out.push_back(est);
  }
  return out;
}

/// Levenberg-Marquardt on pixel reprojection error; the orientation is
/// updated as R * exp(hat(w)) and the center additively.
inline CameraPoseEstimate refine_pose(const CameraPoseEstimate& init, std::span<const Correspondence> cs,
                                      const CameraIntrinsics& k, int iterations = 20) {
  CameraPoseEstimate pose = init;
  auto cost = [&](const CameraPoseEstimate& p) {
    double s = 0.0;
    for (const auto& c : cs) {
      const double e = reprojection_error(p, k, c);
      s += e * e;
    }
    return s;
  };
  double current = cost(pose);
  double lambda = 1e-3;
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    const Mat3 Rt = pose.R_C.matrix().transpose();
    for (const auto& c : cs) {
      const Vec3 x = Rt * (c.world - pose.t_C);
      if (!(x.z() > 0.0)) continue;
      const Vec2 px(k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy);
      const Vec2 r = px - c.pixel;
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx / x.z(), 0.0, -k.fx * x.x() / (x.z() * x.z()),
               0.0, k.fy / x.z(), -k.fy * x.y() / (x.z() * x.z());
      Eigen::Matrix<double, 3, 6> dx;
      dx.block<3, 3>(0, 0) = so3::hat(x);
      dx.block<3, 3>(0, 3) = -Rt;
      const Eigen::Matrix<double, 2, 6> J = dproj * dx;
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 8 && !improved; ++attempt) {
      Eigen::Matrix<double, 6, 6> A = H;
      A.diagonal() += lambda * (H.diagonal().array() + 1e-12).matrix();
      const Eigen::Matrix<double, 6, 1> delta = -A.ldlt().solve(g);
      if (!delta.allFinite()) break;
      CameraPoseEstimate cand = pose;
      cand.R_C = Rotation::unchecked(pose.R_C.matrix() * so3::exp(delta.head<3>()));
      cand.t_C = pose.t_C + delta.tail<3>();
      const double c = cost(cand);
      if (c < current) {
        pose = cand;
        const bool done = current - c < 1e-14 * (1.0 + current);
        current = c;
        lambda = std::max(lambda * 0.3, 1e-9);
        improved = true;
        if (done) return pose;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return pose;
}

struct RansacOptions {
  double px_threshold = 4.0;  // tunable default
  int max_iterations = 1000;  // tunable default
  double confidence = 0.9999;
  uint64_t seed = 0;
  int local_optimization_rounds = 3;
};

struct RansacResult {
  CameraPoseEstimate estimate;
  std::vector<bool> inliers;
  int num_inliers = 0;
  int num_inliers_before_refinement = 0;
  int iterations = 0;
};

namespace detail {

inline int count_inliers(const CameraPoseEstimate& pose, std::span<const Correspondence> cs,
                         const CameraIntrinsics& k, double thr, std::vector<bool>* mask) {
  int n = 0;
  if (mask) mask->assign(cs.size(), false);
  for (size_t i = 0; i < cs.size(); ++i) {
    if (reprojection_error(pose, k, cs[i]) < thr) {
      ++n;
      if (mask) (*mask)[i] = true;
    }
  }
  return n;
}

}  // namespace detail

/// Hypothesise-and-verify over P3P minimal samples. A fourth sampled
/// correspondence picks among the up-to-four P3P solutions; the best
/// hypothesis (most inliers, earliest iteration on ties) is then refined on its
/// inliers. An estimate with fewer than 4 inliers is returned with valid=false.
inline RansacResult ransac_localize(std::span<const Correspondence> cs, const CameraIntrinsics& k,
                                    const RansacOptions& opt = {}) {
  if (cs.size() < 4) {
    throw Error(Errc::insufficient_correspondences,
                "need at least 4 correspondences, got " + std::to_string(cs.size()));
  }
  k.validate();
  const int n = static_cast<int>(cs.size());
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  RansacResult res;
  res.estimate.valid = false;
  int best = 0;
  long long needed = opt.max_iterations;
  int it = 0;
  for (; it < opt.max_iterations && it < needed; ++it) {
    std::array<int, 4> s{};
    for (int a = 0; a < 4; ++a) {
      int v;
      do {
        v = pick(rng);
      } while (std::find(s.begin(), s.begin() + a, v) != s.begin() + a);
      s[static_cast<size_t>(a)] = v;
    }
    const std::array<Correspondence, 3> sample = {cs[static_cast<size_t>(s[0])], cs[static_cast<size_t>(s[1])],
                                                  cs[static_cast<size_t>(s[2])]};
    std::vector<CameraPoseEstimate> sols;
    try {
      sols = p3p_solve(sample, k);
    } catch (const Error&) {
      continue;
    }
    const Correspondence& check = cs[static_cast<size_t>(s[3])];
    const CameraPoseEstimate* chosen = nullptr;
    double chosen_err = opt.px_threshold;
    for (const auto& sol : sols) {
      const double e = reprojection_error(sol, k, check);
      if (e < chosen_err) {
        chosen_err = e;
        chosen = &sol;
      }
    }
    if (!chosen) continue;
    const int count = detail::count_inliers(*chosen, cs, k, opt.px_threshold, nullptr);
    if (count > best) {
      best = count;
      res.estimate = *chosen;
      res.estimate.valid = true;
      const double w = static_cast<double>(best) / n;
      const double denom = std::log(1.0 - w * w * w * w);
      if (denom < 0.0) {
        needed = std::min<long long>(opt.max_iterations,
                                     static_cast<long long>(std::ceil(std::log(1.0 - opt.confidence) / denom)));
      }
    }
  }
  res.iterations = it;
  if (best < 4) {
    res.estimate.valid = false;
    res.inliers.assign(cs.size(), false);
    res.num_inliers = best;
    return res;
  }

  std::vector<bool> mask;
  res.num_inliers = detail::count_inliers(res.estimate, cs, k, opt.px_threshold, &mask);
  res.num_inliers_before_refinement = res.num_inliers;
  res.inliers = mask;
  for (int round = 0; round < opt.local_optimization_rounds; ++round) {
    std::vector<Correspondence> in;
    for (size_t i = 0; i < cs.size(); ++i) {
      if (res.inliers[i]) in.push_back(cs[i]);
    }
    CameraPoseEstimate refined = refine_pose(res.estimate, in, k);
    refined.valid = true;
    const int count = detail::count_inliers(refined, cs, k, opt.px_threshold, &mask);
    if (count < res.num_inliers) break;
    const bool same = count == res.num_inliers && mask == res.inliers;
    res.estimate = refined;
    res.num_inliers = count;
    res.inliers = mask;
    if (same) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Camera trajectories and the velocity outlier filter.

struct CameraTrajectory {
  std::vector<CameraPoseEstimate> poses;
  double rate_hz = 30.0;

  size_t size() const { return poses.size(); }

  void validate() const {
    if (!(rate_hz > 0.0)) throw Error(Errc::invalid_argument, "trajectory rate must be positive");
    const double dt = 1.0 / rate_hz;
    for (size_t i = 1; i < poses.size(); ++i) {
      const double step = poses[i].timestamp - poses[i - 1].timestamp;
      if (!(step > 0.0) || std::abs(step - dt) > 1e-6) {
        throw Error(Errc::invalid_argument, "trajectory timestamps must be uniform at the declared rate");
      }
    }
  }
};

enum class FrameStatus : uint8_t { inlier, outlier, invalid };

struct FilteredTrajectory {
  CameraTrajectory trajectory;      // outliers and invalid frames replaced
  std::vector<FrameStatus> status;  // classification of the input frames
};

namespace detail {

inline int prev_inlier(const std::vector<FrameStatus>& st, int j) {
  for (int i = j - 1; i >= 0; --i) {
    if (st[static_cast<size_t>(i)] == FrameStatus::inlier) return i;
  }
  return -1;
}

inline int next_inlier(const std::vector<FrameStatus>& st, int j) {
  for (int i = j + 1; i < static_cast<int>(st.size()); ++i) {
    if (st[static_cast<size_t>(i)] == FrameStatus::inlier) return i;
  }
  return -1;
}

struct SideVelocity {
  double lo = 0.0;  // slower side
  double hi = 0.0;  // faster side
  int sides = 0;
};

inline SideVelocity side_velocities(const CameraTrajectory& traj, const std::vector<FrameStatus>& st, int j) {
  SideVelocity v;
  v.lo = std::numeric_limits<double>::infinity();
  for (int nb : {prev_inlier(st, j), next_inlier(st, j)}) {
    if (nb < 0) continue;
    const double gap = std::abs(nb - j);
    const double vel =
        (traj.poses[static_cast<size_t>(j)].t_C - traj.poses[static_cast<size_t>(nb)].t_C).norm() * traj.rate_hz / gap;
    v.lo = std::min(v.lo, vel);
    v.hi = std::max(v.hi, vel);
    ++v.sides;
  }
  return v;
}

inline std::vector<FrameStatus> initial_status(const CameraTrajectory& traj) {
  std::vector<FrameStatus> st(traj.size());
  for (size_t i = 0; i < traj.size(); ++i) st[i] = traj.poses[i].valid ? FrameStatus::inlier : FrameStatus::invalid;
  return st;
}

}  // namespace detail

/// Translation speed from frame j to its nearest preceding and following
/// inlier frames, normalised by the frame gap; the larger of the two sides.
inline double trajectory_velocity(const CameraTrajectory& traj, const std::vector<FrameStatus>& status, int j) {
  const auto v = detail::side_velocities(traj, status, j);
  if (v.sides == 0) throw Error(Errc::isolated_frame, "frame " + std::to_string(j) + " has no inlier neighbour");
  return v.hi;
}

inline double trajectory_velocity(const CameraTrajectory& traj, int j) {
  return trajectory_velocity(traj, detail::initial_status(traj), j);
}

/// Iterative velocity-gated outlier rejection followed by interpolation.
///
/// Removal: while some inlier moves faster than eps towards a neighbouring
/// inlier, drop the frame whose slower side is fastest (a spike is fast on
/// both sides, its honest neighbours only on one). Re-admission: a dropped
/// frame that is consistent with every surviving inlier neighbour (one side at
/// the ends of the sequence) comes back. The two steps alternate until
/// neither changes anything.
/// Replaced frames are interpolated linearly in position and geodesically in
/// orientation; leading and trailing gaps hold the nearest inlier.
inline FilteredTrajectory filter_outliers(const CameraTrajectory& traj, double eps) {
  traj.validate();
  if (!(eps > 0.0)) throw Error(Errc::invalid_argument, "velocity threshold must be positive");
  std::vector<FrameStatus> st = detail::initial_status(traj);
  const int n = static_cast<int>(traj.size());
  auto inlier_count = [&] {
    return static_cast<int>(std::count(st.begin(), st.end(), FrameStatus::inlier));
  };
  if (inlier_count() < 2) throw Error(Errc::unrecoverable_trajectory, "fewer than 2 valid camera estimates");

  for (int round = 0; round < 4 * n + 8; ++round) {
    for (;;) {
      int worst = -1;
      detail::SideVelocity worst_v;
      for (int j = 0; j < n; ++j) {
        if (st[static_cast<size_t>(j)] != FrameStatus::inlier) continue;
        const auto v = detail::side_velocities(traj, st, j);
        if (v.sides == 0 || !(v.hi > eps)) continue;
        if (worst < 0 || v.lo > worst_v.lo || (v.lo == worst_v.lo && v.hi > worst_v.hi)) {
          worst = j;
          worst_v = v;
        }
      }
      if (worst < 0) break;
      st[static_cast<size_t>(worst)] = FrameStatus::outlier;
      if (inlier_count() < 2) {
        throw Error(Errc::unrecoverable_trajectory, "fewer than 2 inliers survive outlier filtering");
      }
    }
    bool readmitted = false;
    for (int j = 0; j < n; ++j) {
      if (st[static_cast<size_t>(j)] != FrameStatus::outlier) continue;
      const auto v = detail::side_velocities(traj, st, j);
      if (v.sides >= 1 && v.hi <= eps) {
        st[static_cast<size_t>(j)] = FrameStatus::inlier;
        readmitted = true;
      }
    }
    if (!readmitted) break;
  }

  FilteredTrajectory out;
  out.status = st;
  out.trajectory = traj;
  for (int j = 0; j < n; ++j) {
    if (st[static_cast<size_t>(j)] == FrameStatus::inlier) continue;
    const int a = detail::prev_inlier(st, j);
    const int b = detail::next_inlier(st, j);
    auto& dst = out.trajectory.poses[static_cast<size_t>(j)];
    if (a < 0 || b < 0) {
      const auto& src = traj.poses[static_cast<size_t>(a < 0 ? b : a)];
      dst.R_C = src.R_C;
      dst.t_C = src.t_C;
    } else {
      const auto& pa = traj.poses[static_cast<size_t>(a)];
      const auto& pb = traj.poses[static_cast<size_t>(b)];
      const double u = static_cast<double>(j - a) / static_cast<double>(b - a);
      dst.t_C = (1.0 - u) * pa.t_C + u * pb.t_C;
      dst.R_C = Rotation::unchecked(so3::interpolate(pa.R_C.matrix(), pb.R_C.matrix(), u));
    }
    dst.valid = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files. Correspondences: JSON lines {timestamp, pixels: [[u,v]...],
// world: [[x,y,z]...]}. Trajectory: JSON lines {timestamp, valid,
// q: [w,x,y,z], t: [x,y,z]}. Intrinsics: {fx, fy, cx, cy}.

struct CorrespondenceFrame {
  double timestamp = 0.0;
  std::vector<Correspondence> matches;
};

namespace detail {

template <typename Fn>
void for_each_json_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open '" + path + "'");
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_schema, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

template <int N>
Eigen::Matrix<double, N, 1> json_fixed(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != static_cast<size_t>(N)) {
    throw Error(Errc::parse_schema, std::string(what) + " must have " + std::to_string(N) + " entries");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
  if (!v.allFinite()) throw Error(Errc::parse_non_finite, std::string(what) + " is not finite");
  return v;
}

}  // namespace detail

inline std::vector<CorrespondenceFrame> load_correspondences(const std::string& path) {
  std::vector<CorrespondenceFrame> frames;
  detail::for_each_json_line(path, [&](const nlohmann::json& j) {
    CorrespondenceFrame f;
    f.timestamp = j.at("timestamp").get<double>();
    const auto& px = j.at("pixels");
    const auto& w = j.at("world");
    if (px.size() != w.size()) throw Error(Errc::parse_schema, "pixels and world differ in length");
    for (size_t i = 0; i < px.size(); ++i) {
      f.matches.push_back({detail::json_fixed<2>(px[i], "pixel"), detail::json_fixed<3>(w[i], "world point")});
    }
    frames.push_back(std::move(f));
  });
  return frames;
}

inline void save_correspondences(const std::vector<CorrespondenceFrame>& frames, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write '" + path + "'");
  for (const auto& f : frames) {
    nlohmann::json j;
    j["timestamp"] = f.timestamp;
    j["pixels"] = nlohmann::json::array();
    j["world"] = nlohmann::json::array();
    for (const auto& m : f.matches) {
      j["pixels"].push_back({m.pixel.x(), m.pixel.y()});
      j["world"].push_back({m.world.x(), m.world.y(), m.world.z()});
    }
    out << j.dump() << "\n";
  }
}

inline nlohmann::json camera_pose_to_json(const CameraPoseEstimate& p) {
  const Eigen::Vector4d q = so3::to_quaternion_wxyz(p.R_C.matrix());
  return {{"timestamp", p.timestamp},
          {"valid", p.valid},
          {"q", {q[0], q[1], q[2], q[3]}},
          {"t", {p.t_C.x(), p.t_C.y(), p.t_C.z()}}};
}

inline CameraPoseEstimate camera_pose_from_json(const nlohmann::json& j) {
  CameraPoseEstimate p;
  p.timestamp = j.value("timestamp", 0.0);
  p.valid = j.value("valid", true);
  const auto q = detail::json_fixed<4>(j.at("q"), "q");
  p.R_C = Rotation::unchecked(so3::from_quaternion_wxyz(q[0], q[1], q[2], q[3]));
  p.t_C = detail::json_fixed<3>(j.at("t"), "t");
  return p;
}

inline CameraTrajectory load_camera_trajectory(const std::string& path) {
  CameraTrajectory traj;
  detail::for_each_json_line(path, [&](const nlohmann::json& j) { traj.poses.push_back(camera_pose_from_json(j)); });
  if (traj.poses.size() >= 2) traj.rate_hz = 1.0 / (traj.poses[1].timestamp - traj.poses[0].timestamp);
  return traj;
}

inline void save_camera_trajectory(const CameraTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write '" + path + "'");
  for (const auto& p : traj.poses) out << camera_pose_to_json(p).dump() << "\n";
}

inline CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open intrinsics file '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    CameraIntrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                       j.at("cy").get<double>()};
    k.validate();
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, path + ": " + e.what());
  }
}

}  // namespace egofuse
