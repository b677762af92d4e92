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

// Independent oracles shared by the unit tests and the acceptance binary.
// Nothing here calls into the code under test except for plain data types.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "egofuse/localization.hpp"

namespace egofuse::oracle {

inline CameraIntrinsics test_intrinsics() { return {800.0, 800.0, 320.0, 240.0}; }

inline Mat3 random_rotation(std::mt19937_64& rng) {
  // Uniform via a normalised Gaussian quaternion; independent of so3::exp.
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline CameraPoseEstimate random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  CameraPoseEstimate p;
  p.R_C = Rotation::unchecked(random_rotation(rng));
  p.t_C = Vec3(u(rng), u(rng), u(rng));
  return p;
}

// Pinhole projection written out by hand.
inline Vec2 pinhole(const CameraPoseEstimate& cam, const CameraIntrinsics& k, const Vec3& x) {
  const Vec3 c = cam.R_C.matrix().transpose() * (x - cam.t_C);
  return {k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy};
}

// A world point that lands inside a 640x480 image at depth 2..8 m.
inline Vec3 visible_point(const CameraPoseEstimate& cam, const CameraIntrinsics& k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(20.0, 620.0);
  std::uniform_real_distribution<double> uy(20.0, 460.0);
  std::uniform_real_distribution<double> depth(2.0, 8.0);
  const double z = depth(rng);
  const Vec3 c((ux(rng) - k.cx) / k.fx * z, (uy(rng) - k.cy) / k.fy * z, z);
  return cam.R_C.matrix() * c + cam.t_C;
}

struct MatchSet {
  std::vector<Correspondence> matches;
  std::vector<bool> is_inlier;
};

inline MatchSet synthetic_matches(const CameraPoseEstimate& cam, const CameraIntrinsics& k, int inliers,
                                  int outliers, double px_noise, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, px_noise);
  std::uniform_real_distribution<double> ux(0.0, 640.0);
  std::uniform_real_distribution<double> uy(0.0, 480.0);
  MatchSet s;
  for (int i = 0; i < inliers; ++i) {
    const Vec3 x = visible_point(cam, k, rng);
    Vec2 px = pinhole(cam, k, x);
    if (px_noise > 0.0) px += Vec2(noise(rng), noise(rng));
    s.matches.push_back({px, x});
    s.is_inlier.push_back(true);
  }
  for (int i = 0; i < outliers; ++i) {
    s.matches.push_back({Vec2(ux(rng), uy(rng)), visible_point(cam, k, rng)});
    s.is_inlier.push_back(false);
  }
  // Interleave so the outliers are not a contiguous block.
  std::vector<size_t> perm(s.matches.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  MatchSet out;
  for (size_t i : perm) {
    out.matches.push_back(s.matches[i]);
    out.is_inlier.push_back(s.is_inlier[i]);
  }
  return out;
}

inline double rotation_error(const Mat3& a, const Mat3& b) {
  return Eigen::AngleAxisd(a.transpose() * b).angle();
}

// Camera trajectory along a circle of radius r at constant speed, with
// spikes of fixed magnitude injected at the given rate.
struct SpikedTrajectory {
  CameraTrajectory clean;
  CameraTrajectory spiked;
  std::vector<bool> is_spike;
};

inline SpikedTrajectory spiked_loop(uint64_t seed, int frames = 1800, double rate = 0.1, double magnitude = 5.0,
                                    double radius = 6.0, double speed = 1.0, double hz = 30.0) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution spike(rate);
  std::normal_distribution<double> n(0.0, 1.0);
  SpikedTrajectory s;
  s.clean.rate_hz = hz;
  for (int j = 0; j < frames; ++j) {
    CameraPoseEstimate p;
    p.timestamp = j / hz;
    const double a = speed * p.timestamp / radius;
    p.t_C = Vec3(radius * std::sin(a), radius * (1.0 - std::cos(a)), 1.6);
    p.R_C = Rotation::unchecked(Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix());
    s.clean.poses.push_back(p);
  }
  s.spiked = s.clean;
  s.is_spike.assign(static_cast<size_t>(frames), false);
  for (int j = 0; j < frames; ++j) {
    if (!spike(rng)) continue;
    Vec3 dir(n(rng), n(rng), n(rng));
    s.spiked.poses[static_cast<size_t>(j)].t_C += magnitude * dir.normalized();
    s.is_spike[static_cast<size_t>(j)] = true;
  }
  return s;
}

// Yaw x minimising angle(Rz(x) H, C): dense scan then golden-section refine.
inline double yaw_scan(const Mat3& head, const Mat3& cam) {
  auto f = [&](double x) {
    return rotation_error(Eigen::AngleAxisd(x, Vec3::UnitZ()).toRotationMatrix() * head, cam);
  };
  const int steps = 7200;
  const double h = 2.0 * kPi / steps;
  double best_x = -kPi;
  double best = f(best_x);
  for (int i = 1; i < steps; ++i) {
    const double x = -kPi + i * h;
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = best_x - 2.0 * h;
  double b = best_x + 2.0 * h;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return std::remainder(0.5 * (a + b), 2.0 * kPi);
}

}  // namespace egofuse::oracle
