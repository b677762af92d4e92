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

// Command-line front end: simulate, localize, fuse, evaluate.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "egofuse/egofuse.hpp"

namespace {

using namespace egofuse;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Skeleton skeleton_or_default(const std::string& path) {
  return path.empty() ? Skeleton::smpl_default() : load_skeleton(path);
}

int run_simulate(const std::string& spec_path, const std::string& out_dir, const std::string& skeleton_path) {
  const SimSpec spec = load_sim_spec(spec_path);
  const SimBundle b = generate(spec, skeleton_or_default(skeleton_path));
  save_bundle(b, out_dir);
  std::fprintf(stderr, "simulate: %zu frames, %zu scene points -> %s\n", b.truth.size(), b.scene.points.size(),
               out_dir.c_str());
  return 0;
}

int run_localize(const std::string& matches, const std::string& intrinsics, const std::string& out,
                 RansacOptions opts) {
  const CameraIntrinsics k = load_intrinsics(intrinsics);
  const auto frames = load_correspondences(matches);
  CameraTrajectory traj;
  if (frames.size() >= 2) traj.rate_hz = 1.0 / (frames[1].timestamp - frames[0].timestamp);
  size_t failed = 0;
  for (const auto& f : frames) {
    CameraPoseEstimate est;
    est.timestamp = f.timestamp;
    est.valid = false;
    if (f.matches.size() >= 4) {
      const RansacResult r = ransac_localize(f.matches, k, opts);
      est = r.estimate;
      est.timestamp = f.timestamp;
    }
    if (!est.valid) ++failed;
    traj.poses.push_back(est);
  }
  save_camera_trajectory(traj, out);
  std::fprintf(stderr, "localize: %zu frames, %zu without a pose\n", frames.size(), failed);
  return 0;
}

Sequence with_camera_override(Sequence seq, const CameraTrajectory& traj) {
  if (traj.size() != seq.size()) {
    throw Error(Errc::dimension_mismatch, "camera trajectory has " + std::to_string(traj.size()) +
                                              " frames, sequence has " + std::to_string(seq.size()));
  }
  for (size_t j = 0; j < seq.size(); ++j) {
    const auto& p = traj.poses[j];
    if (std::abs(p.timestamp - seq.frames[j].timestamp) > 1e-6) {
      throw Error(Errc::invalid_argument, "camera trajectory timestamp mismatch at frame " + std::to_string(j));
    }
    seq.frames[j].camera.reset();
    if (p.valid) seq.frames[j].camera = CameraObservation{p.R_C, p.t_C};
  }
  return seq;
}

int run_fuse(const std::string& sequence_path, const std::string& scene_path, const std::string& config_path,
             const std::string& out, const std::string& baseline, const std::string& camera_path,
             const std::string& skeleton_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const FusionConfig cfg = config_path.empty() ? FusionConfig{} : load_config(config_path);
  const Baseline b = parse_baseline(baseline);
  Sequence seq = load_sequence(sequence_path);
  if (!camera_path.empty()) seq = with_camera_override(std::move(seq), load_camera_trajectory(camera_path));
  const double t_load = seconds_since(t0);

  std::optional<ScenePointCloud> cloud;
  std::optional<SceneIndex> index;
  if (!scene_path.empty()) {
    cloud = load_scene(scene_path);
    index.emplace(*cloud);
  } else if (b == Baseline::none && cfg.weights.w_sc > 0.0) {
    throw Error(Errc::invalid_argument, "a scene is required unless w_sc is 0 or a baseline is selected");
  }
  const double t_scene = seconds_since(t0) - t_load;

  const SequenceFusion r = fuse_sequence(seq, index ? &*index : nullptr, skeleton_or_default(skeleton_path), cfg, b);
  save_pose_track(r.track, out);
  std::fprintf(stderr, "fuse: %zu frames, %zu batches; load %.2fs, scene index %.2fs, fusion %.2fs\n", seq.size(),
               r.batches.size(), t_load, t_scene, r.seconds);
  return 0;
}

int run_evaluate(const std::string& result_path, const std::string& truth_path, const std::string& scene_path,
                 const std::string& report_path, std::string csv_path, const std::vector<double>& milestones,
                 const std::string& skeleton_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const PoseTrack result = load_pose_track(result_path);
  const Sequence truth = load_sequence(truth_path);
  const ScenePointCloud cloud = load_scene(scene_path);
  const SceneIndex index(cloud);
  const Skeleton sk = skeleton_or_default(skeleton_path).with_scale(truth.scale);
  const double t_load = seconds_since(t0);
  MetricsReport rep = evaluate_result(sk, result, truth, cloud, index, milestones);
  rep.timings_s["load"] = t_load;
  rep.timings_s["metrics"] = seconds_since(t0) - t_load;

  std::ofstream out(report_path);
  if (!out) throw Error(Errc::io_unreadable, "cannot write report '" + report_path + "'");
  out << report_to_json(rep).dump(2) << '\n';
  if (csv_path.empty()) {
    csv_path = report_path;
    const auto dot = csv_path.rfind('.');
    if (dot != std::string::npos && csv_path.find('/', dot) == std::string::npos) csv_path.resize(dot);
    csv_path += "_drift.csv";
  }
  save_drift_csv(rep.drift_curve, csv_path);
  std::fprintf(stderr, "evaluate: chamfer %.3f cm, root RMSE %.3f cm -> %s, %s\n", rep.chamfer_cm, rep.root_rmse_cm,
               report_path.c_str(), csv_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egofuse: drift-free body trajectories from IMU poses, camera localization and scene contacts"};
  app.require_subcommand(1);
  std::string skeleton;
  app.add_option("--skeleton", skeleton, "Skeleton JSON (default: built-in SMPL topology)");

  std::string spec, out_dir;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic capture");
  sim->add_option("--spec", spec, "SimSpec JSON")->required();
  sim->add_option("--out-dir", out_dir, "Output directory")->required();

  std::string matches, intrinsics, loc_out;
  RansacOptions ropts;
  auto* loc = app.add_subcommand("localize", "Camera poses from 2D-3D matches");
  loc->add_option("--matches", matches, "Correspondences JSONL")->required();
  loc->add_option("--intrinsics", intrinsics, "Intrinsics JSON {fx, fy, cx, cy}")->required();
  loc->add_option("--out", loc_out, "Camera trajectory JSONL")->required();
  loc->add_option("--threshold", ropts.px_threshold, "Inlier threshold, pixels")->capture_default_str();
  loc->add_option("--max-iterations", ropts.max_iterations, "RANSAC iteration budget")->capture_default_str();
  loc->add_option("--seed", ropts.seed, "RANSAC seed")->capture_default_str();

  std::string seq_path, scene_path, config_path, fuse_out, baseline, camera_path;
  auto* fuse = app.add_subcommand("fuse", "Joint optimization over a sequence");
  fuse->add_option("--sequence", seq_path, "Sequence JSONL")->required();
  fuse->add_option("--scene", scene_path, "Scene point cloud (PLY or JSON)");
  fuse->add_option("--config", config_path, "FusionConfig JSON (default values if omitted)");
  fuse->add_option("--out", fuse_out, "Result JSONL")->required();
  fuse->add_option("--baseline", baseline, "imu | imu-cam | imu-cam-filtered | no-scene")
      ->check(CLI::IsMember({"imu", "imu-cam", "imu-cam-filtered", "no-scene"}));
  fuse->add_option("--camera", camera_path, "Camera trajectory JSONL replacing the sequence's camera poses");

  std::string result_path, truth_path, eval_scene, report_path, csv_path;
  std::vector<double> milestones = default_milestones();
  auto* eval = app.add_subcommand("evaluate", "Metrics against ground truth");
  eval->add_option("--result", result_path, "Result JSONL")->required();
  eval->add_option("--truth", truth_path, "Ground-truth sequence JSONL")->required();
  eval->add_option("--scene", eval_scene, "Scene point cloud")->required();
  eval->add_option("--report", report_path, "MetricsReport JSON")->required();
  eval->add_option("--csv", csv_path, "Drift curve CSV (default: <report>_drift.csv)");
  eval->add_option("--milestones", milestones, "Drift milestones in meters")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const char* stage = "egofuse";
  try {
    if (*sim) {
      stage = "simulate";
      return run_simulate(spec, out_dir, skeleton);
    }
    if (*loc) {
      stage = "localize";
      return run_localize(matches, intrinsics, loc_out, ropts);
    }
    if (*fuse) {
      stage = "fuse";
      return run_fuse(seq_path, scene_path, config_path, fuse_out, baseline, camera_path, skeleton);
    }
    if (*eval) {
      stage = "evaluate";
      return run_evaluate(result_path, truth_path, eval_scene, report_path, csv_path, milestones, skeleton);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s: error: %s\n", stage, e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", stage, e.what());
    return 1;
  }
  return 0;
}
