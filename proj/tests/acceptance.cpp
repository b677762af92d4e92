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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Geometry>

#include "egofuse/egofuse.hpp"
#include "oracles.hpp"

namespace egofuse {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<BodyPose> truth_poses(const SimBundle& b) { return pose_track_from_sequence(b.truth).poses; }

std::vector<ContactFlags> truth_contacts(const SimBundle& b) {
  std::vector<ContactFlags> c;
  for (const auto& f : b.truth.frames) c.push_back(f.contacts);
  return c;
}

// Criterion 1 ----------------------------------------------------------------

Outcome rotation_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, kPi - 1e-6);
  double roundtrip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a = Vec3(n(rng), n(rng), n(rng)).normalized() * ang(rng);
    roundtrip = std::max(roundtrip, (log(exp(AxisAngle(a))).v - a).norm());
  }
  double geodesic = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 a = oracle::random_rotation(rng);
    const Mat3 b = oracle::random_rotation(rng);
    const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
    const double d = geodesic_distance(Rotation::unchecked(a), Rotation::unchecked(b));
    geodesic = std::max(geodesic, std::abs(d - std::acos(c)));
  }
  const double t = seconds_since(t0);
  return {roundtrip < 1e-9 && geodesic < 1e-8 && t < 1.0,
          fmt("roundtrip %.2e, geodesic vs trace %.2e, %.3f s", roundtrip, geodesic, t)};
}

// Criterion 2 ----------------------------------------------------------------

VectorX central_difference(const BatchObjective& obj, const VectorX& x, const ContactTargets& t, double h = 1e-6) {
  VectorX g(x.size());
  VectorX y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double fp = obj.evaluate(y, t).total;
    y[i] = x[i] - h;
    const double fm = obj.evaluate(y, t).total;
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const Skeleton sk = Skeleton::smpl_default();
  const ScenePointCloud plane = make_plane_grid(-2.0, -2.0, 4.0, 4.0, 0.05);
  const SceneIndex idx(plane);
  std::mt19937_64 rng(102);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution missing(0.2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    BatchData d;
    std::vector<BodyPose> poses;
    for (int j = 0; j < 10; ++j) {
      BodyPose p;
      for (int i = 0; i < kPoseDim; ++i) p.theta[i] = 0.3 * n(rng);
      p.trans = Vec3(0.3 * n(rng), 0.3 * n(rng), 0.9 + 0.05 * n(rng));
      poses.push_back(p);
      PoseVector imu = p.theta;
      for (int i = 0; i < kPoseDim; ++i) imu[i] += 0.05 * n(rng);
      d.theta_imu.push_back(imu);
      d.contacts.push_back({true, true, true, true});
      if (missing(rng)) {
        d.camera.push_back(std::nullopt);
      } else {
        d.camera.push_back(oracle::random_rotation(rng));
      }
    }
    const BatchObjective obj(sk, d, Weights{}, Rotation::unchecked(oracle::random_rotation(rng)), &idx);
    const VectorX x = pack_poses(poses);
    const ContactTargets t = obj.nearest_targets(x);
    VectorX g;
    obj.evaluate_with_gradient(x, t, g);
    const VectorX fd = central_difference(obj, x, t);
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-8));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 30.0, fmt("worst relative error %.2e over 100 batches, %.1f s", worst, t)};
}

// Criterion 3 ----------------------------------------------------------------

Outcome zero_residual() {
  SimSpec spec;
  spec.duration = 3.0;
  spec.speed = 0.0;
  spec.seed = 103;
  const SimBundle b = generate(spec);
  const FusionConfig cfg;
  const FusionInputs in = prepare_inputs(b.truth, b.skeleton, cfg);
  const SceneIndex idx(b.scene);
  const int n = static_cast<int>(b.truth.size());
  const auto gt = truth_poses(b);
  const BatchData batch = batch_data(in, 0, n);
  const EnergyTerms e =
      evaluate_objective(pack_poses(gt), batch, cfg, b.skeleton, &idx, in.calibration.head_to_camera).raw;
  const double terms[] = {e.self, e.contact, e.slide, e.trans_smooth, e.root_smooth, e.head_smooth, e.imu};
  const double worst_term = *std::max_element(std::begin(terms), std::end(terms));
  const FusionResult r = optimize_batch(batch, gt, cfg, b.skeleton, &idx, in.calibration.head_to_camera);
  double moved = 0.0;
  for (size_t j = 0; j < gt.size(); ++j) {
    moved = std::max(moved, (r.poses[j].theta - gt[j].theta).cwiseAbs().maxCoeff());
    moved = std::max(moved, (r.poses[j].trans - gt[j].trans).cwiseAbs().maxCoeff());
  }

  // A walking truth keeps nonzero smoothness; its data terms still vanish.
  SimSpec walk = spec;
  walk.speed = 1.0;
  const SimBundle w = generate(walk);
  const FusionInputs win = prepare_inputs(w.truth, w.skeleton, cfg);
  const SceneIndex widx(w.scene);
  const EnergyTerms we = evaluate_objective(pack_poses(truth_poses(w)), batch_data(win, 0, static_cast<int>(w.truth.size())),
                                            cfg, w.skeleton, &widx, win.calibration.head_to_camera)
                             .raw;
  const double worst_data = std::max({we.self, we.contact, we.slide, we.imu});
  return {worst_term < 1e-8 && moved < 1e-8 && worst_data < 1e-8,
          fmt("standing: worst term %.1e, vars moved %.1e (%d iterations); walking data terms %.1e", worst_term, moved,
              r.iterations, worst_data)};
}

// Criterion 4 ----------------------------------------------------------------

SimSpec loop_spec(uint64_t seed) {
  SimSpec s;
  s.path = PathType::circle;
  s.radius = 6.0;
  s.duration = 385.0;  // a little past 380 m so the last window is full
  s.imu.yaw_drift = 0.02;
  s.camera.outlier_rate = 0.05;
  s.camera.position_noise = 0.01;
  s.camera.orientation_noise = 0.002;
  s.seed = seed;
  return s;
}

struct LoopErrors {
  std::vector<DriftPoint> imu, fused;
};

LoopErrors run_loop(uint64_t seed) {
  const std::vector<double> milestones = {0.0, 380.0};
  const SimBundle b = generate(loop_spec(seed));
  const SceneIndex idx(b.scene);
  const auto gt = truth_poses(b);
  const FusionConfig cfg;
  return {drift_curve(fuse_sequence(b.corrupted, &idx, b.skeleton, cfg, Baseline::imu).track.poses, gt, milestones),
          drift_curve(fuse_sequence(b.corrupted, &idx, b.skeleton, cfg).track.poses, gt, milestones)};
}

Outcome drift_free() {
  const auto t0 = Clock::now();
  // Seeds are independent; run as many side by side as there are cores.
  const size_t width = std::max(1u, std::thread::hardware_concurrency());
  std::vector<LoopErrors> results(10);
  for (size_t first = 0; first < results.size(); first += width) {
    std::vector<std::future<LoopErrors>> jobs;
    for (size_t i = first; i < std::min(results.size(), first + width); ++i) {
      jobs.push_back(std::async(std::launch::async, run_loop, i + 1));
    }
    for (size_t i = 0; i < jobs.size(); ++i) results[first + i] = jobs[i].get();
  }
  bool all = true;
  double imu_ratio = 1e300, fused_ratio = 0.0, cross = 0.0;
  for (size_t i = 0; i < results.size(); ++i) {
    const LoopErrors& e = results[i];
    if (e.imu.size() != 2 || e.fused.size() != 2) return {false, "loop shorter than 380 m"};
    const auto &imu = e.imu, &fused = e.fused;
    const bool ok = imu[1].error_cm > 10.0 * imu[0].error_cm && fused[1].error_cm <= 2.0 * fused[0].error_cm &&
                    fused[1].error_cm <= 0.2 * imu[1].error_cm;
    std::printf("  seed %2zu: imu %.2f -> %.2f cm, fused %.2f -> %.2f cm%s\n", i + 1, imu[0].error_cm, imu[1].error_cm,
                fused[0].error_cm, fused[1].error_cm, ok ? "" : "  <- fails");
    all = all && ok;
    imu_ratio = std::min(imu_ratio, imu[1].error_cm / imu[0].error_cm);
    fused_ratio = std::max(fused_ratio, fused[1].error_cm / fused[0].error_cm);
    cross = std::max(cross, fused[1].error_cm / imu[1].error_cm);
  }
  const double t = seconds_since(t0);
  return {all && t < 600.0,
          fmt("10 seeds: min imu growth %.1fx, max fused growth %.2fx, max fused/imu at 380 m %.4f, %.0f s", imu_ratio,
              fused_ratio, cross, t)};
}

// Criterion 5 ----------------------------------------------------------------

Outcome foot_contact() {
  SimSpec s;
  s.path = PathType::circle;
  s.radius = 6.0;
  s.duration = 180.0;
  s.imu.yaw_drift = 0.02;
  s.camera.outlier_rate = 0.05;
  s.camera.position_noise = 0.01;
  s.camera.orientation_noise = 0.002;
  s.seed = 105;
  const SimBundle b = generate(s);
  const SceneIndex idx(b.scene);
  const auto contacts = truth_contacts(b);
  FusionConfig cfg;
  cfg.weights.w_v = 10.0;
  auto metrics = [&](Baseline bl) {
    return foot_metrics(b.skeleton, fuse_sequence(b.corrupted, &idx, b.skeleton, cfg, bl).track.poses, contacts,
                        b.scene, idx);
  };
  const FootMetrics fused = metrics(Baseline::none);
  const FootMetrics no_scene = metrics(Baseline::no_scene);
  // The imu baseline carries the articulation through untouched.
  const FootMetrics imu = metrics(Baseline::imu);
  if (!fused.dist_to_surface_cm || !no_scene.dist_to_surface_cm || !fused.sliding_cm || !imu.sliding_cm) {
    return {false, "no contact frames"};
  }
  const bool pass = *fused.dist_to_surface_cm < 0.5 && *fused.dist_to_surface_cm < *no_scene.dist_to_surface_cm &&
                    *fused.sliding_cm <= 1.1 * *imu.sliding_cm;
  return {pass, fmt("dist to surface fused %.4f cm vs no-scene %.4f cm; sliding fused %.4f cm vs imu %.4f cm",
                    *fused.dist_to_surface_cm, *no_scene.dist_to_surface_cm, *fused.sliding_cm, *imu.sliding_cm)};
}

// Criterion 6 ----------------------------------------------------------------

Outcome outlier_filter() {
  int injected = 0, flagged = 0;
  bool idempotent = true;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = oracle::spiked_loop(600 + seed);
    const FilteredTrajectory once = filter_outliers(s.spiked, 3.0);
    for (size_t j = 0; j < s.is_spike.size(); ++j) {
      if (!s.is_spike[j]) continue;
      ++injected;
      if (once.status[j] != FrameStatus::inlier) ++flagged;
    }
    const FilteredTrajectory twice = filter_outliers(once.trajectory, 3.0);
    for (size_t j = 0; j < once.trajectory.size(); ++j) {
      idempotent = idempotent && twice.status[j] == FrameStatus::inlier &&
                   twice.trajectory.poses[j].t_C == once.trajectory.poses[j].t_C &&
                   twice.trajectory.poses[j].R_C.matrix() == once.trajectory.poses[j].R_C.matrix();
    }
  }
  const double recall = static_cast<double>(flagged) / injected;
  return {recall >= 0.95 && idempotent,
          fmt("recall %d/%d = %.4f, idempotent %s", flagged, injected, recall, idempotent ? "yes" : "no")};
}

// Criterion 7 ----------------------------------------------------------------

Outcome localization() {
  const CameraIntrinsics k = oracle::test_intrinsics();
  std::mt19937_64 rng(107);
  double p3p_rot = 0.0, p3p_trans = 0.0, ransac_rot = 0.0, ransac_trans = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const CameraPoseEstimate cam = oracle::random_camera(rng);
    const auto three = oracle::synthetic_matches(cam, k, 3, 0, 0.0, rng);
    double best_r = 1e9, best_t = 1e9;
    for (const auto& s : p3p_solve(three.matches, k)) {
      const double r = oracle::rotation_error(s.R_C.matrix(), cam.R_C.matrix());
      const double t = (s.t_C - cam.t_C).norm();
      if (r + t < best_r + best_t) best_r = r, best_t = t;
    }
    p3p_rot = std::max(p3p_rot, best_r);
    p3p_trans = std::max(p3p_trans, best_t);
    const auto many = oracle::synthetic_matches(cam, k, 30, 0, 0.0, rng);
    const RansacResult r = ransac_localize(many.matches, k, {.seed = static_cast<uint64_t>(trial)});
    ransac_rot = std::max(ransac_rot, r.estimate.valid ? oracle::rotation_error(r.estimate.R_C.matrix(), cam.R_C.matrix()) : 1e9);
    ransac_trans = std::max(ransac_trans, r.estimate.valid ? (r.estimate.t_C - cam.t_C).norm() : 1e9);
  }
  int good = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 r2(7000 + seed);
    const CameraPoseEstimate cam = oracle::random_camera(r2);
    const auto ms = oracle::synthetic_matches(cam, k, 70, 30, 1.0, r2);
    const RansacResult r = ransac_localize(ms.matches, k, {.seed = seed});
    if (r.estimate.valid && oracle::rotation_error(r.estimate.R_C.matrix(), cam.R_C.matrix()) < 0.01) ++good;
  }
  const bool pass = p3p_rot < 1e-6 && p3p_trans < 1e-6 && ransac_rot < 1e-6 && ransac_trans < 1e-6 && good >= 49;
  return {pass, fmt("noiseless p3p %.1e rad / %.1e m, ransac %.1e rad / %.1e m; 30%% outliers %d/50", p3p_rot,
                    p3p_trans, ransac_rot, ransac_trans, good)};
}

// Criterion 8 ----------------------------------------------------------------

Outcome frame_alignment() {
  const Skeleton sk = Skeleton::smpl_default();
  std::mt19937_64 rng(108);
  std::normal_distribution<double> n(0.0, 0.5);
  std::uniform_real_distribution<double> phi_dist(-kPi + 1e-6, kPi - 1e-6);
  double worst = 0.0;
  bool axis_exact = true;
  for (int i = 0; i < 100; ++i) {
    PoseVector theta;
    for (int d = 0; d < kPoseDim; ++d) theta[d] = n(rng);
    const double phi = phi_dist(rng);
    const Mat3 cam = Eigen::AngleAxisd(phi, Vec3::UnitZ()).toRotationMatrix() * head_orientation(sk, theta).matrix();
    const AlignmentResult r = align_frames(theta, Rotation::unchecked(cam), sk);
    worst = std::max(worst, std::abs(std::remainder(r.yaw - phi, 2 * kPi)));
    const Mat3& m = r.R_A_star.matrix();
    const Vec3 aa = log(r.R_A_star).v;
    axis_exact = axis_exact && m(2, 2) == 1.0 && m(0, 2) == 0.0 && m(1, 2) == 0.0 && m(2, 0) == 0.0 &&
                 m(2, 1) == 0.0 && aa.x() == 0.0 && aa.y() == 0.0;
  }
  return {worst < 1e-8 && axis_exact,
          fmt("worst yaw error %.1e rad, axis exactly z: %s", worst, axis_exact ? "yes" : "no")};
}

// Criterion 9 ----------------------------------------------------------------

Outcome batch_stitching() {
  const FusionConfig cfg;
  SimSpec s;
  s.duration = (3 * cfg.batch_length - 1) / s.rate_hz;  // 3T frames
  s.imu.yaw_drift = 0.02;
  s.camera.outlier_rate = 0.05;
  s.camera.position_noise = 0.01;
  s.camera.orientation_noise = 0.002;
  s.seed = 109;
  const SimBundle b = generate(s);
  const SceneIndex idx(b.scene);
  FusionConfig c = cfg;
  c.batch_overlap = 30;
  const SequenceFusion f = fuse_sequence(b.corrupted, &idx, b.skeleton, c);
  const auto gt = truth_poses(b);
  // Jump: stitched frame-to-frame root motion minus the true motion, over
  // every overlap and one frame either side.
  double worst = 0.0;
  for (size_t w = 1; w < f.windows.size(); ++w) {
    const int from = std::max(1, f.windows[w].first - 1);
    const int to = std::min(static_cast<int>(gt.size()) - 1, f.windows[w - 1].second + 1);
    for (int j = from; j <= to; ++j) {
      const auto u = static_cast<size_t>(j);
      const Vec3 step = f.track.poses[u].trans - f.track.poses[u - 1].trans;
      worst = std::max(worst, (step - (gt[u].trans - gt[u - 1].trans)).norm());
    }
  }
  return {b.truth.size() == static_cast<size_t>(3 * cfg.batch_length) && f.windows.size() >= 3 && worst < 0.01,
          fmt("%zu frames in %zu batches, worst seam jump %.3f cm", b.truth.size(), f.windows.size(), 100.0 * worst)};
}

// Criterion 10 ---------------------------------------------------------------

Outcome performance() {
  SimSpec s;
  s.duration = 299.0 / 30.0;  // T = 300 frames
  s.imu.yaw_drift = 0.02;
  s.camera.position_noise = 0.01;
  s.camera.orientation_noise = 0.002;
  s.scene.spacing = 20.0 / 320.0;
  s.seed = 110;
  SimBundle b = generate(s);
  // Top the ground up to exactly 1e5 points with scattered floor samples.
  std::mt19937_64 rng(110);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  if (b.scene.points.size() > 100000) b.scene.points.resize(100000);
  if (!b.scene.normals.empty()) b.scene.normals.resize(b.scene.points.size());
  while (b.scene.points.size() < 100000) {
    b.scene.points.emplace_back(u(rng), u(rng), 0.0);
    if (!b.scene.normals.empty()) b.scene.normals.emplace_back(0.0, 0.0, 1.0);
  }
  const auto t0 = Clock::now();
  const SceneIndex idx(b.scene);
  const FusionConfig cfg;
  const Skeleton sk = b.skeleton;
  const FusionInputs in = prepare_inputs(b.corrupted, sk, cfg);
  const int n = static_cast<int>(b.corrupted.size());
  const FusionResult r = optimize_batch(batch_data(in, 0, n), initialize_batch(in, 0, n, sk, cfg), cfg, sk, &idx,
                                        in.calibration.head_to_camera);
  const double t = seconds_since(t0);

  std::uniform_real_distribution<double> probe(-11.0, 11.0);
  std::uniform_real_distribution<double> height(-0.5, 2.0);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 q(probe(rng), probe(rng), height(rng));
    double best = 1e300;
    for (const Vec3& p : b.scene.points) best = std::min(best, (p - q).norm());
    if (idx.closest_point(q).distance == best) ++exact;
  }
  return {n == 300 && t < 60.0 && exact == 1000,
          fmt("T=%d, %zu points, %d iterations in %.1f s; brute force agrees on %d/1000 probes", n,
              b.scene.points.size(), r.iterations, t, exact)};
}

}  // namespace
}  // namespace egofuse

int main(int argc, char** argv) {
  using namespace egofuse;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"rotation suite", rotation_suite},   {"gradient check", gradient_check},
      {"zero-residual oracle", zero_residual}, {"drift-free loop", drift_free},
      {"foot contact", foot_contact},       {"outlier filter", outlier_filter},
      {"p3p/ransac", localization},         {"frame alignment", frame_alignment},
      {"batch stitching", batch_stitching}, {"performance", performance},
  };
  // Optional list of criterion numbers to run, e.g. `acceptance 4 5`.
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int c = std::atoi(argv[i]);
    if (c >= 1 && c <= static_cast<int>(criteria.size())) selected[static_cast<size_t>(c - 1)] = true;
  }
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
