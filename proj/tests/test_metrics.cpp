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

#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "egofuse/metrics.hpp"

namespace egofuse {
namespace {

double brute_chamfer_cm(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto one = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double s = 0.0;
    for (const Vec3& p : from) {
      double best = 1e300;
      for (const Vec3& q : to) best = std::min(best, (p - q).norm());
      s += best;
    }
    return s / static_cast<double>(from.size());
  };
  return 50.0 * (one(a, b) + one(b, a));
}

TEST(Chamfer, IdenticalSetsGiveZero) {
  const std::vector<Vec3> a = {Vec3(0, 0, 0), Vec3(1, 2, 3), Vec3(-4, 0, 1)};
  EXPECT_EQ(chamfer(a, a), 0.0);
}

TEST(Chamfer, TranslatedIsolatedPoints) {
  std::vector<Vec3> a;
  std::vector<Vec3> b;
  for (int i = 0; i < 10; ++i) {
    a.emplace_back(i * 1.0, 0, 0);
    b.push_back(a.back() + Vec3(0.01, 0, 0));
  }
  EXPECT_NEAR(chamfer(a, b), 1.0, 1e-9);
}

TEST(Chamfer, MatchesBruteForce) {
  std::mt19937_64 rng(60);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> a(50 + trial);
    std::vector<Vec3> b(80 - trial);
    for (Vec3& p : a) p = Vec3(n(rng), n(rng), n(rng));
    for (Vec3& p : b) p = Vec3(n(rng), n(rng), n(rng));
    EXPECT_NEAR(chamfer(a, b), brute_chamfer_cm(a, b), 1e-10);
  }
}

TEST(Chamfer, EmptySetIsAnError) {
  const std::vector<Vec3> a = {Vec3::Zero()};
  EXPECT_THROW(chamfer(a, {}), Error);
}

struct Plane {
  ScenePointCloud cloud = make_plane_grid(-2.0, -2.0, 4.0, 4.0, 0.02);
  SceneIndex index{cloud};
};

// Pose whose lowest sole markers sit at the given height.
BodyPose standing_at(const Skeleton& sk, double height) {
  BodyPose p;
  double low = 1e9;
  for (int k = 0; k < kNumFootParts; ++k) {
    for (const Vec3& m : foot_points(sk, p, static_cast<FootPart>(k))) low = std::min(low, m.z());
  }
  p.trans.z() = height - low;
  return p;
}

TEST(FootMetrics, OnPlaneAndStatic) {
  const Skeleton sk = Skeleton::smpl_default();
  const Plane plane;
  const std::vector<BodyPose> poses(5, standing_at(sk, 0.0));
  // Only the heels: the default heel markers share one height.
  const std::vector<ContactFlags> c(5, ContactFlags{false, true, false, true});
  const FootMetrics m = foot_metrics(sk, poses, c, plane.cloud, plane.index);
  ASSERT_TRUE(m.dist_to_surface_cm && m.sliding_cm);
  EXPECT_NEAR(*m.dist_to_surface_cm, 0.0, 1e-9);
  EXPECT_NEAR(*m.sliding_cm, 0.0, 1e-12);
}

TEST(FootMetrics, TwoCentimetersAbove) {
  const Skeleton sk = Skeleton::smpl_default();
  const Plane plane;
  const std::vector<BodyPose> poses(5, standing_at(sk, 0.02));
  const std::vector<ContactFlags> c(5, ContactFlags{false, true, false, true});
  const FootMetrics m = foot_metrics(sk, poses, c, plane.cloud, plane.index);
  EXPECT_NEAR(*m.dist_to_surface_cm, 2.0, 1e-9);
  EXPECT_NEAR(*m.sliding_cm, 0.0, 1e-12);
}

TEST(FootMetrics, GlideOfOneCentimeterPerFrame) {
  const Skeleton sk = Skeleton::smpl_default();
  const Plane plane;
  std::vector<BodyPose> poses(6, standing_at(sk, 0.0));
  for (size_t j = 0; j < poses.size(); ++j) poses[j].trans += Vec3(0.006, 0.008, 0.0) * static_cast<double>(j);
  const std::vector<ContactFlags> c(6, ContactFlags{true, true, true, true});
  EXPECT_NEAR(*foot_metrics(sk, poses, c, plane.cloud, plane.index).sliding_cm, 1.0, 1e-9);
}

TEST(FootMetrics, NoContactsAreAbsentNotZero) {
  const Skeleton sk = Skeleton::smpl_default();
  const Plane plane;
  const std::vector<BodyPose> poses(3, standing_at(sk, 0.0));
  const FootMetrics none = foot_metrics(sk, poses, std::vector<ContactFlags>(3), plane.cloud, plane.index);
  EXPECT_FALSE(none.dist_to_surface_cm.has_value());
  EXPECT_FALSE(none.sliding_cm.has_value());
  // Isolated contacts give a distance but no sliding.
  const std::vector<ContactFlags> sparse = {ContactFlags{true, true, true, true}, ContactFlags{},
                                            ContactFlags{true, true, true, true}};
  const FootMetrics m = foot_metrics(sk, poses, sparse, plane.cloud, plane.index);
  EXPECT_TRUE(m.dist_to_surface_cm.has_value());
  EXPECT_FALSE(m.sliding_cm.has_value());
}

TEST(FootMetrics, WithoutNormalsUsesPointDistance) {
  const Skeleton sk = Skeleton::smpl_default();
  ScenePointCloud sparse{{Vec3(5, 5, 0)}, {}};
  const SceneIndex idx(sparse);
  const std::vector<BodyPose> poses(1, standing_at(sk, 0.0));
  const std::vector<ContactFlags> c(1, ContactFlags{true, false, false, false});
  double expect = 0.0;
  const auto pts = foot_points(sk, poses[0], FootPart::left_toe);
  for (const Vec3& m : pts) expect += (m - Vec3(5, 5, 0)).norm();
  expect = 100.0 * expect / static_cast<double>(pts.size());
  EXPECT_NEAR(*foot_metrics(sk, poses, c, sparse, idx).dist_to_surface_cm, expect, 1e-9);
}

std::vector<BodyPose> straight(int n, double step) {
  std::vector<BodyPose> p(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) p[static_cast<size_t>(j)].trans = Vec3(step * j, 0, 0.9);
  return p;
}

TEST(Drift, TruthGivesZeroCurve) {
  const auto t = straight(3000, 0.05);  // 150 m
  const auto curve = drift_curve(t, t);
  ASSERT_EQ(curve.size(), 2u);  // 200 m and 380 m lie beyond the path
  for (const auto& p : curve) EXPECT_EQ(p.error_cm, 0.0);
}

TEST(Drift, ConstantOffsetIsFlat) {
  const auto t = straight(8000, 0.05);  // 400 m
  auto r = t;
  for (auto& p : r) p.trans += Vec3(0, 0.03, 0.04);
  const auto curve = drift_curve(r, t);
  ASSERT_EQ(curve.size(), 4u);
  for (const auto& p : curve) EXPECT_NEAR(p.error_cm, 5.0, 1e-9);
  EXPECT_EQ(curve[3].distance_m, 380.0);
}

TEST(Drift, WindowAveragesAroundMilestone) {
  const auto t = straight(201, 0.1);  // 20 m
  auto r = t;
  for (size_t j = 0; j < r.size(); ++j) r[j].trans.y() += 0.001 * static_cast<double>(j);  // cm = 0.1 j
  const auto curve = drift_curve(r, t, {10.0}, 2.0);
  // Frames 90..110 lie within 1 m of the milestone; their mean index is 100.
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_NEAR(curve[0].error_cm, 10.0, 1e-9);
  EXPECT_THROW(drift_curve(r, std::vector<BodyPose>(5)), Error);
}

TEST(Report, JsonAndCsv) {
  MetricsReport r;
  r.chamfer_cm = 1.5;
  r.drift_curve = {{0.0, 1.0}, {70.0, 2.5}};
  r.timings_s["fuse"] = 3.0;
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["dist_to_surface_cm"].is_null());
  EXPECT_EQ(j["drift_curve"][1]["error_cm"], 2.5);
  const std::string path = ::testing::TempDir() + "egofuse_drift.csv";
  save_drift_csv(r.drift_curve, path);
  std::ifstream in(path);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "distance_m,error_cm");
  EXPECT_EQ(row, "0,1");
}

TEST(Report, RootRmse) {
  const auto t = straight(10, 0.1);
  auto r = t;
  for (auto& p : r) p.trans.z() += 0.02;
  EXPECT_NEAR(root_rmse_cm(r, t), 2.0, 1e-9);
}

}  // namespace
}  // namespace egofuse
