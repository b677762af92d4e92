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
#include <chrono>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egofuse/alignment.hpp"
#include "egofuse/energy.hpp"

namespace egofuse {

/// Adam-style descent with separate initial steps for rotation and
/// translation coordinates and a geometric step decay.
struct OptimizerSettings {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double rotation_step = 2e-3;     // radians
  double translation_step = 2e-3;  // meters
  double final_step_fraction = 0.05;  // step at the last iteration relative to the first
  int refresh_interval = 25;          // iterations between nearest-point refreshes
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-10;

  void validate() const {
    if (max_iterations < 0) throw Error(Errc::invalid_argument, "max_iterations must be >= 0");
    if (!(gradient_tolerance >= 0.0)) throw Error(Errc::invalid_argument, "gradient_tolerance must be >= 0");
    if (!(rotation_step > 0.0) || !(translation_step > 0.0)) {
      throw Error(Errc::invalid_argument, "optimizer steps must be positive");
    }
    if (!(final_step_fraction > 0.0 && final_step_fraction <= 1.0)) {
      throw Error(Errc::invalid_argument, "final_step_fraction must be in (0, 1]");
    }
    if (refresh_interval < 1) throw Error(Errc::invalid_argument, "refresh_interval must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
      throw Error(Errc::invalid_argument, "invalid optimizer moment parameters");
    }
  }
};

/// Axis convention of the camera orientations in a sequence.
enum class CameraAxes {
  optical,  // x right, y down, z forward (what `localize` writes)
  body,     // x forward, y left, z up, like the body frames
};

struct FusionConfig {
  Weights weights;
  int batch_length = 300;
  int batch_overlap = 30;
  OptimizerSettings optimizer;
  HeadingVariant heading = HeadingVariant::exact;
  int tangent_offset = 10;
  double stationary_threshold = 0.01;  // meters over tangent_offset frames
  double outlier_velocity = 3.0;       // m/s
  double norm_smoothing = kDefaultNormSmoothing;
  Vec3 camera_offset = Vec3::Zero();  // camera center in the head frame, meters
  CameraAxes camera_axes = CameraAxes::optical;

  void validate() const {
    weights.validate();
    optimizer.validate();
    if (batch_length < 2) throw Error(Errc::invalid_argument, "batch_length must be >= 2");
    if (batch_overlap < 0 || batch_overlap >= batch_length) {
      throw Error(Errc::invalid_argument, "batch_overlap must be in [0, batch_length)");
    }
    if (tangent_offset < 1) throw Error(Errc::invalid_argument, "tangent_offset must be >= 1");
    if (!(stationary_threshold >= 0.0)) throw Error(Errc::invalid_argument, "stationary_threshold must be >= 0");
    if (!(outlier_velocity > 0.0)) throw Error(Errc::invalid_argument, "outlier_velocity must be positive");
    if (!(norm_smoothing >= 0.0)) throw Error(Errc::invalid_argument, "norm_smoothing must be >= 0");
    if (!camera_offset.allFinite()) throw Error(Errc::invalid_argument, "camera_offset must be finite");
  }
};

inline nlohmann::json config_to_json(const FusionConfig& c) {
  const Weights& w = c.weights;
  const OptimizerSettings& o = c.optimizer;
  return {
      {"w_s", w.w_s}, {"w_sc", w.w_sc}, {"w_c", w.w_c}, {"w_v", w.w_v}, {"w_sm", w.w_sm},
      {"w_T", w.w_T}, {"w_G", w.w_G}, {"w_H", w.w_H}, {"w_p", w.w_p},
      {"batch_length", c.batch_length},
      {"batch_overlap", c.batch_overlap},
      {"optimizer",
       {{"max_iterations", o.max_iterations}, {"gradient_tolerance", o.gradient_tolerance},
        {"rotation_step", o.rotation_step}, {"translation_step", o.translation_step},
        {"final_step_fraction", o.final_step_fraction}, {"refresh_interval", o.refresh_interval},
        {"beta1", o.beta1}, {"beta2", o.beta2}, {"epsilon", o.epsilon}}},
      {"heading_correction", c.heading == HeadingVariant::exact ? "exact" : "verbatim"},
      {"tangent_offset", c.tangent_offset},
      {"stationary_threshold", c.stationary_threshold},
      {"outlier_velocity", c.outlier_velocity},
      {"norm_smoothing", c.norm_smoothing},
      {"camera_offset", {c.camera_offset.x(), c.camera_offset.y(), c.camera_offset.z()}},
      {"camera_axes", c.camera_axes == CameraAxes::optical ? "optical" : "body"},
  };
}

/// Missing keys keep their defaults; unknown keys are rejected so typos do
/// not pass silently.
inline FusionConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "w_s", "w_sc", "w_c", "w_v", "w_sm", "w_T", "w_G", "w_H", "w_p", "batch_length", "batch_overlap",
      "optimizer", "heading_correction", "tangent_offset", "stationary_threshold", "outlier_velocity",
      "norm_smoothing", "camera_offset", "camera_axes", "skeleton"};
  if (!j.is_object()) throw Error(Errc::parse_schema, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(Errc::parse_schema, "unknown config key '" + key + "'");
    }
  }
  FusionConfig c;
  try {
    auto get = [&](const nlohmann::json& src, const char* key, auto& dst) {
      if (src.contains(key)) dst = src.at(key).get<std::decay_t<decltype(dst)>>();
    };
    Weights& w = c.weights;
    get(j, "w_s", w.w_s);
    get(j, "w_sc", w.w_sc);
    get(j, "w_c", w.w_c);
    get(j, "w_v", w.w_v);
    get(j, "w_sm", w.w_sm);
    get(j, "w_T", w.w_T);
    get(j, "w_G", w.w_G);
    get(j, "w_H", w.w_H);
    get(j, "w_p", w.w_p);
    get(j, "batch_length", c.batch_length);
    get(j, "batch_overlap", c.batch_overlap);
    get(j, "tangent_offset", c.tangent_offset);
    get(j, "stationary_threshold", c.stationary_threshold);
    get(j, "outlier_velocity", c.outlier_velocity);
    get(j, "norm_smoothing", c.norm_smoothing);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      get(o, "max_iterations", c.optimizer.max_iterations);
      get(o, "gradient_tolerance", c.optimizer.gradient_tolerance);
      get(o, "rotation_step", c.optimizer.rotation_step);
      get(o, "translation_step", c.optimizer.translation_step);
      get(o, "final_step_fraction", c.optimizer.final_step_fraction);
      get(o, "refresh_interval", c.optimizer.refresh_interval);
      get(o, "beta1", c.optimizer.beta1);
      get(o, "beta2", c.optimizer.beta2);
      get(o, "epsilon", c.optimizer.epsilon);
    }
    if (j.contains("heading_correction")) {
      const auto v = j.at("heading_correction").get<std::string>();
      if (v == "exact") {
        c.heading = HeadingVariant::exact;
      } else if (v == "verbatim") {
        c.heading = HeadingVariant::verbatim;
      } else {
        throw Error(Errc::parse_schema, "heading_correction must be 'exact' or 'verbatim'");
      }
    }
    if (j.contains("camera_axes")) {
      const auto v = j.at("camera_axes").get<std::string>();
      if (v == "optical") {
        c.camera_axes = CameraAxes::optical;
      } else if (v == "body") {
        c.camera_axes = CameraAxes::body;
      } else {
        throw Error(Errc::parse_schema, "camera_axes must be 'optical' or 'body'");
      }
    }
    if (j.contains("camera_offset")) c.camera_offset = detail::json_vec3(j.at("camera_offset"), "camera_offset");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline FusionConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_schema, "config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------

struct FusionResult {
  std::vector<BodyPose> poses;
  EnergyBreakdown initial;
  EnergyBreakdown final;
  std::vector<double> outer_energies;  // total with freshly refreshed targets, per outer iteration
  int iterations = 0;
  bool converged = false;  // gradient tolerance reached
};

/// Minimises the batch objective from `x0`.
///
/// Nearest scene points are refreshed every `refresh_interval` iterations.
/// Each outer iteration restarts from the best iterate found so far, which
/// makes the outer energies non-increasing: the best iterate is no worse than
/// the start under frozen targets, and refreshing can only move targets
/// closer.
inline FusionResult optimize_batch(const BatchObjective& obj, const VectorX& x0, const OptimizerSettings& opt) {
  opt.validate();
  const Eigen::Index n = obj.num_vars();
  if (x0.size() != n) throw Error(Errc::dimension_mismatch, "initial variables do not match the batch");

  VectorX step_scale(n);
  for (int j = 0; j < obj.frames(); ++j) {
    step_scale.segment<kPoseDim>(kFrameVars * j).setConstant(opt.rotation_step);
    step_scale.segment<3>(kFrameVars * j + kPoseDim).setConstant(opt.translation_step);
  }
  const double decay =
      opt.max_iterations > 1 ? std::pow(opt.final_step_fraction, 1.0 / (opt.max_iterations - 1)) : 1.0;

  FusionResult res;
  VectorX best = x0;
  ContactTargets targets = obj.nearest_targets(best);
  VectorX grad(n);
  EnergyBreakdown best_e = obj.evaluate_with_gradient(best, targets, grad);
  res.initial = best_e;
  res.outer_energies.push_back(best_e.total);

  VectorX m = VectorX::Zero(n);
  VectorX v = VectorX::Zero(n);
  VectorX x = best;
  int t_adam = 0;
  double lr = 1.0;
  int it = 0;
  while (true) {
    if (grad.norm() <= opt.gradient_tolerance) {
      // The gradient here belongs to x; only stop if x is the best point.
      if (x == best) {
        res.converged = true;
        break;
      }
    }
    if (it >= opt.max_iterations) break;

    m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
    v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
    ++t_adam;
    const double c1 = 1.0 - std::pow(opt.beta1, t_adam);
    const double c2 = 1.0 - std::pow(opt.beta2, t_adam);
    x.array() -= lr * step_scale.array() * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.epsilon);
    lr *= decay;
    ++it;

    const EnergyBreakdown e = obj.evaluate_with_gradient(x, targets, grad);
    if (e.total < best_e.total) {
      best = x;
      best_e = e;
    }
    if (it % opt.refresh_interval == 0 && it < opt.max_iterations) {
      targets = obj.nearest_targets(best);
      x = best;
      best_e = obj.evaluate_with_gradient(x, targets, grad);
      res.outer_energies.push_back(best_e.total);
      m.setZero();
      v.setZero();
      t_adam = 0;
    }
  }
  res.iterations = it;
  targets = obj.nearest_targets(best);
  res.final = obj.evaluate(best, targets);
  if (res.outer_energies.back() != res.final.total) res.outer_energies.push_back(res.final.total);
  res.poses = unpack_poses(best);
  return res;
}

inline FusionResult optimize_batch(const BatchData& batch, std::span<const BodyPose> init, const FusionConfig& cfg,
                                   const Skeleton& sk, const SceneIndex* scene, const Rotation& head_to_camera) {
  cfg.validate();
  if (init.size() != batch.theta_imu.size()) throw Error(Errc::dimension_mismatch, "init and batch lengths differ");
  const BatchObjective obj(sk, batch, cfg.weights, head_to_camera, scene, cfg.norm_smoothing);
  return optimize_batch(obj, pack_poses(init), cfg.optimizer);
}

inline EnergyBreakdown evaluate_objective(const VectorX& vars, const BatchData& batch, const FusionConfig& cfg,
                                          const Skeleton& sk, const SceneIndex* scene,
                                          const Rotation& head_to_camera) {
  const BatchObjective obj(sk, batch, cfg.weights, head_to_camera, scene, cfg.norm_smoothing);
  return obj.evaluate(vars);
}

/// Analytic gradient with nearest-point targets frozen at `vars`.
inline VectorX gradient(const VectorX& vars, const BatchData& batch, const FusionConfig& cfg, const Skeleton& sk,
                        const SceneIndex* scene, const Rotation& head_to_camera) {
  const BatchObjective obj(sk, batch, cfg.weights, head_to_camera, scene, cfg.norm_smoothing);
  VectorX g;
  obj.evaluate_with_gradient(vars, obj.nearest_targets(vars), g);
  return g;
}

// ---------------------------------------------------------------------------
// Sequence pipeline.

enum class Baseline { none, imu, imu_cam, imu_cam_filtered, no_scene };

inline Baseline parse_baseline(const std::string& s) {
  if (s.empty() || s == "none") return Baseline::none;
  if (s == "imu") return Baseline::imu;
  if (s == "imu-cam") return Baseline::imu_cam;
  if (s == "imu-cam-filtered") return Baseline::imu_cam_filtered;
  if (s == "no-scene") return Baseline::no_scene;
  throw Error(Errc::invalid_argument, "unknown baseline '" + s + "'");
}

/// Camera center for a pose placed at the origin: the head joint plus the
/// camera offset expressed in the head frame.
inline Vec3 camera_lever_arm(const Skeleton& sk, const PoseVector& theta, const Vec3& camera_offset) {
  BodyPose p;
  p.theta = theta;
  const JointTransforms fk = forward_kinematics(sk, p);
  const auto h = static_cast<size_t>(sk.head_joint());
  return fk.position[h] + fk.rotation[h] * camera_offset;
}

struct Calibration {
  int reference_frame = -1;  // first frame with a camera observation
  AlignmentResult alignment;
  Rotation head_to_camera;
};

inline Calibration calibrate(const Sequence& seq, const Skeleton& sk) {
  Calibration c;
  for (size_t j = 0; j < seq.size(); ++j) {
    if (seq.frames[j].camera) {
      c.reference_frame = static_cast<int>(j);
      break;
    }
  }
  if (c.reference_frame < 0) throw Error(Errc::unrecoverable_trajectory, "sequence has no camera observation");
  const Frame& f = seq.frames[static_cast<size_t>(c.reference_frame)];
  c.alignment = align_frames(f.theta_imu, f.camera->R, sk);
  const PoseVector aligned_root = apply_heading_correction(f.theta_imu, c.alignment.R_A_star.matrix());
  c.head_to_camera = head_camera_offset(sk, aligned_root, f.camera->R);
  return c;
}

/// Per-frame heading corrections from the planar tangents of the camera and
/// IMU trajectories. Stationary frames reuse the last moving frame's
/// correction; frames before the first moving frame use the first one.
inline std::vector<Mat3> heading_corrections(std::span<const Vec3> camera_positions, std::span<const Vec3> imu_positions,
                                             const FusionConfig& cfg) {
  const size_t n = camera_positions.size();
  std::vector<Mat3> out(n, Mat3::Identity());
  if (n <= static_cast<size_t>(cfg.tangent_offset)) return out;
  auto planar = [](std::span<const Vec3> in) {
    std::vector<Vec3> p(in.begin(), in.end());
    for (Vec3& v : p) v.z() = 0.0;
    return p;
  };
  const auto pc = planar(camera_positions);
  const auto pi = planar(imu_positions);
  const TangentField tc = trajectory_tangents(pc, cfg.tangent_offset, cfg.stationary_threshold);
  const TangentField ti = trajectory_tangents(pi, cfg.tangent_offset, cfg.stationary_threshold);
  std::optional<Mat3> last;
  std::vector<bool> have(n, false);
  for (size_t j = 0; j < n; ++j) {
    if (!tc.stationary[j] && !ti.stationary[j]) {
      try {
        last = heading_correction_matrix(ti.tangent[j], tc.tangent[j], cfg.heading);
      } catch (const Error& e) {
        if (e.code() != Errc::ambiguous_correction) throw;
      }
    }
    if (last) {
      out[j] = *last;
      have[j] = true;
    }
  }
  const auto first = std::find(have.begin(), have.end(), true);
  if (first != have.end()) {
    const Mat3 lead = out[static_cast<size_t>(first - have.begin())];
    for (auto it = have.begin(); it != first; ++it) out[static_cast<size_t>(it - have.begin())] = lead;
  }
  return out;
}

/// Batch windows [begin, end). Consecutive windows share at least `overlap`
/// frames; the last window is aligned to the end of the sequence.
inline std::vector<std::pair<int, int>> batch_windows(int n, int length, int overlap) {
  std::vector<std::pair<int, int>> w;
  if (n <= length) {
    w.emplace_back(0, n);
    return w;
  }
  const int stride = length - overlap;
  for (int s = 0;; s += stride) {
    if (s + length >= n) {
      w.emplace_back(n - length, n);
      break;
    }
    w.emplace_back(s, s + length);
  }
  return w;
}

struct SequenceFusion {
  PoseTrack track;
  Calibration calibration;
  FilteredTrajectory filtered;
  std::vector<BodyPose> initial;
  std::vector<FusionResult> batches;
  std::vector<std::pair<int, int>> windows;
  double seconds = 0.0;
};

struct FusionInputs {
  Sequence aligned;
  Calibration calibration;
  FilteredTrajectory filtered;
};

/// Camera orientations re-expressed in body axes. The frame alignment
/// searches yaw only, so it needs camera and head frames that agree up to a
/// small mounting rotation.
inline Sequence to_body_axes(const Sequence& seq, CameraAxes axes) {
  Sequence out = seq;
  if (axes == CameraAxes::body) return out;
  const Mat3 m = optical_axes().transpose();
  for (Frame& f : out.frames) {
    if (f.camera) f.camera->R = Rotation::unchecked(f.camera->R.matrix() * m);
  }
  return out;
}

inline FusionInputs prepare_inputs(const Sequence& seq, const Skeleton& sk, const FusionConfig& cfg) {
  seq.validate();
  FusionInputs in;
  const Sequence body = to_body_axes(seq, cfg.camera_axes);
  in.calibration = calibrate(body, sk);
  in.aligned = apply_alignment(body, in.calibration.alignment.R_A_star);
  in.filtered = filter_outliers(in.aligned.camera_trajectory(), cfg.outlier_velocity);
  return in;
}

/// Initial poses: heading-corrected IMU articulation and root translation
/// placed so the camera lands on the filtered camera position.
inline std::vector<BodyPose> initialize_poses(const FusionInputs& in, const Skeleton& sk, const FusionConfig& cfg) {
  const auto& frames = in.aligned.frames;
  const size_t n = frames.size();
  std::vector<Vec3> cam(n);
  std::vector<Vec3> imu(n);
  for (size_t j = 0; j < n; ++j) {
    cam[j] = in.filtered.trajectory.poses[j].t_C;
    imu[j] = frames[j].t_imu;
  }
  const auto corr = heading_corrections(cam, imu, cfg);
  std::vector<BodyPose> out(n);
  for (size_t j = 0; j < n; ++j) {
    out[j].theta = apply_heading_correction(frames[j].theta_imu, corr[j]);
    out[j].trans = cam[j] - camera_lever_arm(sk, out[j].theta, cfg.camera_offset);
  }
  return out;
}

inline BatchData batch_data(const FusionInputs& in, int begin, int end) {
  BatchData b = BatchData::from_sequence(in.aligned, static_cast<size_t>(begin), static_cast<size_t>(end));
  for (int j = begin; j < end; ++j) {
    if (in.filtered.status[static_cast<size_t>(j)] != FrameStatus::inlier) b.camera[static_cast<size_t>(j - begin)].reset();
  }
  return b;
}

inline std::vector<BodyPose> initialize_batch(const FusionInputs& in, int begin, int end, const Skeleton& sk,
                                              const FusionConfig& cfg) {
  const auto all = initialize_poses(in, sk, cfg);
  return {all.begin() + begin, all.begin() + end};
}

namespace detail {

inline BodyPose blend_poses(const BodyPose& a, const BodyPose& b, double u) {
  BodyPose out;
  for (int i = 0; i < kNumJoints; ++i) {
    out.set_joint_aa(i, so3::log(so3::interpolate(so3::exp(a.joint_aa(i)), so3::exp(b.joint_aa(i)), u)));
  }
  out.trans = (1.0 - u) * a.trans + u * b.trans;
  return out;
}

inline std::vector<BodyPose> baseline_poses(const FusionInputs& in, const Skeleton& sk, const FusionConfig& cfg,
                                            Baseline b) {
  const auto& frames = in.aligned.frames;
  const size_t n = frames.size();
  std::vector<BodyPose> out(n);
  if (b == Baseline::imu) {
    // IMU translation anchored to the camera at the reference frame.
    const auto ref = static_cast<size_t>(in.calibration.reference_frame);
    const Vec3 root_ref =
        frames[ref].camera->t - camera_lever_arm(sk, frames[ref].theta_imu, cfg.camera_offset);
    const Vec3 shift = root_ref - frames[ref].t_imu;
    for (size_t j = 0; j < n; ++j) {
      out[j].theta = frames[j].theta_imu;
      out[j].trans = frames[j].t_imu + shift;
    }
    return out;
  }
  std::optional<Vec3> held;
  for (size_t j = 0; j < n; ++j) {
    std::optional<Vec3> c;
    if (b == Baseline::imu_cam_filtered) {
      c = in.filtered.trajectory.poses[j].t_C;
    } else if (frames[j].camera) {
      c = frames[j].camera->t;
    }
    if (c) held = c;
    out[j].theta = frames[j].theta_imu;
    if (held) out[j].trans = *held - camera_lever_arm(sk, frames[j].theta_imu, cfg.camera_offset);
  }
  // Leading frames without an observation take the first one.
  const auto ref = static_cast<size_t>(in.calibration.reference_frame);
  for (size_t j = 0; j < ref; ++j) {
    out[j].trans = frames[ref].camera->t - camera_lever_arm(sk, frames[j].theta_imu, cfg.camera_offset);
  }
  return out;
}

}  // namespace detail

/// Full pipeline: alignment, calibration, filtering, initialization and
/// batch optimization with linear blending over batch overlaps.
/// `scene` may be null, which disables the contact terms.
inline SequenceFusion fuse_sequence(const Sequence& seq, const SceneIndex* scene, const Skeleton& skeleton,
                                    const FusionConfig& cfg, Baseline baseline = Baseline::none) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const Skeleton sk = skeleton.with_scale(seq.scale);
  const FusionInputs in = prepare_inputs(seq, sk, cfg);
  SequenceFusion out;
  out.calibration = in.calibration;
  out.filtered = in.filtered;
  for (const Frame& f : in.aligned.frames) out.track.timestamps.push_back(f.timestamp);

  if (baseline == Baseline::imu || baseline == Baseline::imu_cam || baseline == Baseline::imu_cam_filtered) {
    out.track.poses = detail::baseline_poses(in, sk, cfg, baseline);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  FusionConfig run_cfg = cfg;
  if (baseline == Baseline::no_scene) run_cfg.weights.w_sc = 0.0;
  const SceneIndex* run_scene = run_cfg.weights.w_sc > 0.0 ? scene : nullptr;

  out.initial = initialize_poses(in, sk, run_cfg);
  const int n = static_cast<int>(seq.size());
  out.windows = batch_windows(n, run_cfg.batch_length, run_cfg.batch_overlap);
  std::vector<BodyPose>& poses = out.track.poses;
  poses.resize(static_cast<size_t>(n));
  int prev_end = 0;
  for (const auto& [begin, end] : out.windows) {
    const BatchData data = batch_data(in, begin, end);
    const std::span<const BodyPose> init(out.initial.data() + begin, static_cast<size_t>(end - begin));
    FusionResult r = optimize_batch(data, init, run_cfg, sk, run_scene, in.calibration.head_to_camera);
    const int overlap = std::max(0, prev_end - begin);
    for (int j = begin; j < end; ++j) {
      const BodyPose& p = r.poses[static_cast<size_t>(j - begin)];
      if (j < prev_end) {
        const double u = static_cast<double>(j - begin + 1) / static_cast<double>(overlap + 1);
        poses[static_cast<size_t>(j)] = detail::blend_poses(poses[static_cast<size_t>(j)], p, u);
      } else {
        poses[static_cast<size_t>(j)] = p;
      }
    }
    prev_end = end;
    out.batches.push_back(std::move(r));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace egofuse
