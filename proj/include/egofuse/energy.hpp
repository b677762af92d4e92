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
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "egofuse/kinematics.hpp"
#include "egofuse/scene.hpp"
#include "egofuse/sequence.hpp"

namespace egofuse {

/// Term weights of the joint objective
///   E = w_s E_self + w_sc (w_c E_contact + w_v E_slide)
///     + w_sm (w_T E_T + w_G E_G + w_H E_H) + w_p E_IMU.
/// Defaults were tuned on synthetic data; they are not published values.
struct Weights {
  double w_s = 1.0;
  double w_sc = 1.0;
  double w_c = 1.0;
  double w_v = 1.0;
  double w_sm = 1.0;
  double w_T = 0.5;
  double w_G = 0.5;
  double w_H = 0.5;
  double w_p = 10.0;

  void validate() const {
    for (double w : {w_s, w_sc, w_c, w_v, w_sm, w_T, w_G, w_H, w_p}) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::invalid_argument, "weights must be finite and >= 0");
    }
  }

  static Weights zero() { return {0, 0, 0, 0, 0, 0, 0, 0, 0}; }
};

struct EnergyTerms {
  double self = 0.0;
  double contact = 0.0;
  double slide = 0.0;
  double trans_smooth = 0.0;  // E_T
  double root_smooth = 0.0;   // E_G
  double head_smooth = 0.0;   // E_H
  double imu = 0.0;

  double sum() const { return self + contact + slide + trans_smooth + root_smooth + head_smooth + imu; }
  bool all_finite() const { return std::isfinite(sum()); }
};

/// Raw term values, their weighted contributions, and the total (which is the
/// sum of the weighted contributions).
struct EnergyBreakdown {
  EnergyTerms raw;
  EnergyTerms weighted;
  double total = 0.0;
};

inline EnergyBreakdown weigh(const EnergyTerms& raw, const Weights& w) {
  EnergyBreakdown b;
  b.raw = raw;
  b.weighted.self = w.w_s * raw.self;
  b.weighted.contact = w.w_sc * w.w_c * raw.contact;
  b.weighted.slide = w.w_sc * w.w_v * raw.slide;
  b.weighted.trans_smooth = w.w_sm * w.w_T * raw.trans_smooth;
  b.weighted.root_smooth = w.w_sm * w.w_G * raw.root_smooth;
  b.weighted.head_smooth = w.w_sm * w.w_H * raw.head_smooth;
  b.weighted.imu = w.w_p * raw.imu;
  b.total = b.weighted.sum();
  return b;
}

/// sqrt(|x|^2 + mu^2) - mu: the Euclidean norm made differentiable at zero.
inline double smooth_norm(double squared, double mu) { return std::sqrt(squared + mu * mu) - mu; }

inline constexpr double kDefaultNormSmoothing = 1e-6;
inline constexpr int kFrameVars = kPoseDim + 3;

using VectorX = Eigen::VectorXd;

// Variable layout: one block of 75 per frame, [theta (72), trans (3)].
inline BodyPose frame_pose(const VectorX& vars, int j) {
  BodyPose p;
  p.theta = vars.segment<kPoseDim>(kFrameVars * j);
  p.trans = vars.segment<3>(kFrameVars * j + kPoseDim);
  return p;
}

inline void set_frame_pose(VectorX& vars, int j, const BodyPose& p) {
  vars.segment<kPoseDim>(kFrameVars * j) = p.theta;
  vars.segment<3>(kFrameVars * j + kPoseDim) = p.trans;
}

inline VectorX pack_poses(std::span<const BodyPose> poses) {
  VectorX v(kFrameVars * static_cast<Eigen::Index>(poses.size()));
  for (size_t j = 0; j < poses.size(); ++j) set_frame_pose(v, static_cast<int>(j), poses[j]);
  return v;
}

inline std::vector<BodyPose> unpack_poses(const VectorX& vars) {
  if (vars.size() % kFrameVars != 0) throw Error(Errc::dimension_mismatch, "variable vector is not 75 T long");
  std::vector<BodyPose> out(static_cast<size_t>(vars.size() / kFrameVars));
  for (size_t j = 0; j < out.size(); ++j) out[j] = frame_pose(vars, static_cast<int>(j));
  return out;
}

/// Observations a batch is optimised against.
struct BatchData {
  std::vector<PoseVector> theta_imu;
  std::vector<ContactFlags> contacts;
  std::vector<std::optional<Mat3>> camera;  // orientations for the self-localization term

  int size() const { return static_cast<int>(theta_imu.size()); }

  void validate() const {
    if (theta_imu.empty()) throw Error(Errc::empty_input, "batch is empty");
    if (contacts.size() != theta_imu.size() || camera.size() != theta_imu.size()) {
      throw Error(Errc::dimension_mismatch, "batch fields differ in length");
    }
  }

  static BatchData from_sequence(const Sequence& seq, size_t begin, size_t end) {
    BatchData b;
    for (size_t j = begin; j < end; ++j) {
      const Frame& f = seq.frames[j];
      b.theta_imu.push_back(f.theta_imu);
      b.contacts.push_back(f.contacts);
      b.camera.push_back(f.camera ? std::optional<Mat3>(f.camera->R.matrix()) : std::nullopt);
    }
    return b;
  }
};

/// Nearest scene points for every contact-flagged marker, held fixed while
/// the optimizer takes steps.
struct ContactTargets {
  int markers_per_frame = 0;
  std::vector<Vec3> points;  // [frame * markers_per_frame + marker]

  bool empty() const { return points.empty(); }
  const Vec3& at(int frame, int marker) const { return points[static_cast<size_t>(frame * markers_per_frame + marker)]; }
};

// ---------------------------------------------------------------------------
// Individual terms, written directly from their definitions. The fused
// objective below must agree with these.

inline double e_self(std::span<const PoseVector> theta, const Rotation& head_to_camera,
                     std::span<const std::optional<Rotation>> camera, const Skeleton& sk,
                     double mu = kDefaultNormSmoothing) {
  if (theta.size() != camera.size()) throw Error(Errc::dimension_mismatch, "theta and camera lengths differ");
  double sum = 0.0;
  int n = 0;
  for (size_t j = 0; j < theta.size(); ++j) {
    if (!camera[j]) continue;
    const Rotation predicted = camera_from_pose(sk, theta[j], head_to_camera);
    const double d = so3::log(predicted.matrix().transpose() * camera[j]->matrix()).norm();
    sum += smooth_norm(d * d, mu);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

inline double e_contact(std::span<const BodyPose> poses, std::span<const ContactFlags> contacts, const Skeleton& sk,
                        const SceneIndex& scene, double mu = kDefaultNormSmoothing) {
  if (poses.size() != contacts.size()) throw Error(Errc::dimension_mismatch, "poses and contacts lengths differ");
  if (poses.empty()) return 0.0;
  double sum = 0.0;
  for (size_t j = 0; j < poses.size(); ++j) {
    for (int k = 0; k < kNumFootParts; ++k) {
      if (!contacts[j][static_cast<size_t>(k)]) continue;
      const auto pts = foot_points(sk, poses[j], static_cast<FootPart>(k));
      double part = 0.0;
      for (const Vec3& m : pts) {
        const double d = scene.closest_point(m).distance;
        part += smooth_norm(d * d, mu);
      }
      sum += part / static_cast<double>(pts.size());
    }
  }
  return sum / (4.0 * static_cast<double>(poses.size()));
}

inline double e_slide(std::span<const BodyPose> poses, std::span<const ContactFlags> contacts, const Skeleton& sk,
                      double mu = kDefaultNormSmoothing) {
  if (poses.size() != contacts.size()) throw Error(Errc::dimension_mismatch, "poses and contacts lengths differ");
  if (poses.size() < 2) return 0.0;
  double sum = 0.0;
  for (size_t j = 0; j + 1 < poses.size(); ++j) {
    for (int k = 0; k < kNumFootParts; ++k) {
      if (!contacts[j][static_cast<size_t>(k)] || !contacts[j + 1][static_cast<size_t>(k)]) continue;
      const auto a = foot_points(sk, poses[j], static_cast<FootPart>(k));
      const auto b = foot_points(sk, poses[j + 1], static_cast<FootPart>(k));
      double part = 0.0;
      for (size_t n = 0; n < a.size(); ++n) part += smooth_norm((a[n] - b[n]).squaredNorm(), mu);
      sum += part / static_cast<double>(a.size());
    }
  }
  return sum / (4.0 * static_cast<double>(poses.size() - 1));
}

struct SmoothTerms {
  double trans = 0.0;  // E_T
  double root = 0.0;   // E_G
  double head = 0.0;   // E_H
};

inline SmoothTerms e_smooth(std::span<const BodyPose> poses, const Skeleton& sk, double mu = kDefaultNormSmoothing) {
  SmoothTerms s;
  if (poses.size() < 2) return s;
  for (size_t j = 0; j + 1 < poses.size(); ++j) {
    s.trans += smooth_norm((poses[j].trans - poses[j + 1].trans).squaredNorm(), mu);
    const double g = so3::angle_between(so3::exp(poses[j].joint_aa(0)), so3::exp(poses[j + 1].joint_aa(0)));
    s.root += smooth_norm(g * g, mu);
    const double h = so3::angle_between(head_orientation(sk, poses[j].theta).matrix(),
                                        head_orientation(sk, poses[j + 1].theta).matrix());
    s.head += smooth_norm(h * h, mu);
  }
  const auto m = static_cast<double>(poses.size() - 1);
  s.trans /= m;
  s.root /= m;
  s.head /= m;
  return s;
}

/// Mean distance of the articulation from the IMU pose; the root triple is
/// masked out.
inline double e_imu(std::span<const PoseVector> theta, std::span<const PoseVector> theta_imu,
                    double mu = kDefaultNormSmoothing) {
  if (theta.size() != theta_imu.size()) throw Error(Errc::dimension_mismatch, "theta lengths differ");
  if (theta.empty()) return 0.0;
  double sum = 0.0;
  for (size_t j = 0; j < theta.size(); ++j) {
    const double d2 = (theta[j].tail<kPoseDim - 3>() - theta_imu[j].tail<kPoseDim - 3>()).squaredNorm();
    sum += smooth_norm(d2, mu);
  }
  return sum / static_cast<double>(theta.size());
}

// ---------------------------------------------------------------------------

/// The joint objective over one batch with an analytic gradient.
///
/// Rotational derivatives are accumulated as world-frame angular vectors per
/// joint ("torques"): perturbing theta_i by d rotates everything below joint i
/// by phi = R_i Jr(theta_i) d, so dE/dtheta_i = Jr^T R_i^T dE/dphi_i.
class BatchObjective {
 public:
  BatchObjective(const Skeleton& sk, BatchData data, const Weights& weights, const Rotation& head_to_camera,
                 const SceneIndex* scene, double mu = kDefaultNormSmoothing)
      : sk_(sk), data_(std::move(data)), w_(weights), rhc_(head_to_camera.matrix()), scene_(scene), mu_(mu) {
    data_.validate();
    w_.validate();
    if (!(mu_ >= 0.0)) throw Error(Errc::invalid_argument, "norm smoothing must be >= 0");
    for (int k = 0; k < kNumFootParts; ++k) {
      part_begin_[static_cast<size_t>(k)] = static_cast<int>(markers_.size());
      for (const auto& m : sk_.markers(static_cast<FootPart>(k))) markers_.push_back(m);
      part_size_[static_cast<size_t>(k)] = static_cast<int>(sk_.markers(static_cast<FootPart>(k)).size());
    }
  }

  int frames() const { return data_.size(); }
  int num_vars() const { return kFrameVars * frames(); }
  const BatchData& data() const { return data_; }
  const Weights& weights() const { return w_; }
  bool has_scene() const { return scene_ != nullptr; }

  ContactTargets nearest_targets(const VectorX& vars) const {
    check_dims(vars);
    ContactTargets t;
    if (!scene_) return t;
    const int m = static_cast<int>(markers_.size());
    t.markers_per_frame = m;
    t.points.assign(static_cast<size_t>(m * frames()), Vec3::Zero());
    for (int j = 0; j < frames(); ++j) {
      const auto& c = data_.contacts[static_cast<size_t>(j)];
      if (!(c[0] || c[1] || c[2] || c[3])) continue;
      const JointTransforms fk = fk_unchecked(frame_pose(vars, j));
      for (int k = 0; k < kNumFootParts; ++k) {
        if (!c[static_cast<size_t>(k)]) continue;
        for (int n = 0; n < part_size_[static_cast<size_t>(k)]; ++n) {
          const int idx = part_begin_[static_cast<size_t>(k)] + n;
          const Vec3 x = marker_position(fk, markers_[static_cast<size_t>(idx)], sk_.scale());
          t.points[static_cast<size_t>(j * m + idx)] = scene_->closest_point(x).point;
        }
      }
    }
    return t;
  }

  EnergyBreakdown evaluate(const VectorX& vars, const ContactTargets& targets) const {
    return run(vars, targets, nullptr);
  }

  EnergyBreakdown evaluate(const VectorX& vars) const { return run(vars, nearest_targets(vars), nullptr); }

  EnergyBreakdown evaluate_with_gradient(const VectorX& vars, const ContactTargets& targets, VectorX& grad) const {
    return run(vars, targets, &grad);
  }

 private:
  struct FrameState {
    JointTransforms fk;
    std::vector<Vec3> markers;
  };

  void check_dims(const VectorX& vars) const {
    if (vars.size() != num_vars()) {
      throw Error(Errc::dimension_mismatch,
                  "expected " + std::to_string(num_vars()) + " variables, got " + std::to_string(vars.size()));
    }
  }

  JointTransforms fk_unchecked(const BodyPose& p) const {
    JointTransforms out;
    const double s = sk_.scale();
    for (int i = 0; i < kNumJoints; ++i) {
      const Mat3 local = so3::exp(p.joint_aa(i));
      const int parent = sk_.joint(i).parent;
      const auto ii = static_cast<size_t>(i);
      if (parent < 0) {
        out.rotation[ii] = local;
        out.position[ii] = p.trans + s * sk_.joint(i).offset;
      } else {
        const auto pi = static_cast<size_t>(parent);
        out.rotation[ii] = out.rotation[pi] * local;
        out.position[ii] = out.position[pi] + out.rotation[pi] * (s * sk_.joint(i).offset);
      }
    }
    return out;
  }

  EnergyBreakdown run(const VectorX& vars, const ContactTargets& targets, VectorX* grad) const {
    check_dims(vars);
    const int T = frames();
    const int M = static_cast<int>(markers_.size());
    const double s = sk_.scale();
    const int head = sk_.head_joint();
    const auto& chain = sk_.head_chain();

    std::vector<FrameState> st(static_cast<size_t>(T));
    for (int j = 0; j < T; ++j) {
      auto& f = st[static_cast<size_t>(j)];
      f.fk = fk_unchecked(frame_pose(vars, j));
      f.markers.resize(static_cast<size_t>(M));
      for (int n = 0; n < M; ++n) f.markers[static_cast<size_t>(n)] = marker_position(f.fk, markers_[static_cast<size_t>(n)], s);
    }
    auto R = [&](int j, int i) -> const Mat3& { return st[static_cast<size_t>(j)].fk.rotation[static_cast<size_t>(i)]; };

    std::vector<std::array<Vec3, kNumJoints>> tau;
    std::vector<Vec3> marker_grad;
    if (grad) {
      grad->setZero(num_vars());
      std::array<Vec3, kNumJoints> zero;
      zero.fill(Vec3::Zero());
      tau.assign(static_cast<size_t>(T), zero);
      marker_grad.assign(static_cast<size_t>(T * M), Vec3::Zero());
    }
    auto add_head_torque = [&](int j, const Vec3& v) {
      for (int i : chain) tau[static_cast<size_t>(j)][static_cast<size_t>(i)] += v;
    };

    EnergyTerms raw;

    // Self-localization: mean geodesic distance between predicted and observed
    // camera orientation over frames that have an observation.
    {
      int n_cam = 0;
      for (const auto& c : data_.camera) n_cam += c.has_value() ? 1 : 0;
      if (n_cam > 0) {
        const double coef = w_.w_s / n_cam;
        double sum = 0.0;
        for (int j = 0; j < T; ++j) {
          const auto& cam = data_.camera[static_cast<size_t>(j)];
          if (!cam) continue;
          const Mat3 predicted = R(j, head) * rhc_;
          const Vec3 r = so3::log(predicted.transpose() * *cam);
          const double n2 = r.squaredNorm();
          sum += smooth_norm(n2, mu_);
          if (grad && coef != 0.0) add_head_torque(j, -coef * (*cam * r) / std::sqrt(n2 + mu_ * mu_));
        }
        raw.self = sum / n_cam;
      }
    }

    // Articulation prior, root triple masked.
    {
      const double coef = w_.w_p / T;
      double sum = 0.0;
      for (int j = 0; j < T; ++j) {
        const auto d = vars.segment<kPoseDim - 3>(kFrameVars * j + 3) -
                       data_.theta_imu[static_cast<size_t>(j)].tail<kPoseDim - 3>();
        const double n2 = d.squaredNorm();
        sum += smooth_norm(n2, mu_);
        if (grad && coef != 0.0) {
          grad->segment<kPoseDim - 3>(kFrameVars * j + 3) += coef * d / std::sqrt(n2 + mu_ * mu_);
        }
      }
      raw.imu = sum / T;
    }

    if (T >= 2) {
      const double inv = 1.0 / (T - 1);
      const double c_t = w_.w_sm * w_.w_T * inv;
      const double c_g = w_.w_sm * w_.w_G * inv;
      const double c_h = w_.w_sm * w_.w_H * inv;
      double sum_t = 0.0;
      double sum_g = 0.0;
      double sum_h = 0.0;
      for (int j = 0; j + 1 < T; ++j) {
        const Vec3 d = vars.segment<3>(kFrameVars * j + kPoseDim) - vars.segment<3>(kFrameVars * (j + 1) + kPoseDim);
        const double n2 = d.squaredNorm();
        sum_t += smooth_norm(n2, mu_);
        if (grad && c_t != 0.0) {
          const Vec3 g = c_t * d / std::sqrt(n2 + mu_ * mu_);
          grad->segment<3>(kFrameVars * j + kPoseDim) += g;
          grad->segment<3>(kFrameVars * (j + 1) + kPoseDim) -= g;
        }

        // Left perturbations of A and B change |log(A^T B)| by -(B r)/|r| and
        // +(B r)/|r| respectively.
        {
          const Mat3& a = R(j, 0);
          const Mat3& b = R(j + 1, 0);
          const Vec3 r = so3::log(a.transpose() * b);
          const double r2 = r.squaredNorm();
          sum_g += smooth_norm(r2, mu_);
          if (grad && c_g != 0.0) {
            const Vec3 v = c_g * (b * r) / std::sqrt(r2 + mu_ * mu_);
            tau[static_cast<size_t>(j)][0] -= v;
            tau[static_cast<size_t>(j + 1)][0] += v;
          }
        }
        {
          const Mat3& a = R(j, head);
          const Mat3& b = R(j + 1, head);
          const Vec3 r = so3::log(a.transpose() * b);
          const double r2 = r.squaredNorm();
          sum_h += smooth_norm(r2, mu_);
          if (grad && c_h != 0.0) {
            const Vec3 v = c_h * (b * r) / std::sqrt(r2 + mu_ * mu_);
            add_head_torque(j, -v);
            add_head_torque(j + 1, v);
          }
        }
      }
      raw.trans_smooth = sum_t * inv;
      raw.root_smooth = sum_g * inv;
      raw.head_smooth = sum_h * inv;
    }

    // Contact with frozen nearest scene points.
    if (!targets.empty()) {
      if (targets.markers_per_frame != M || static_cast<int>(targets.points.size()) != M * T) {
        throw Error(Errc::dimension_mismatch, "contact targets do not match the batch");
      }
      const double coef = w_.w_sc * w_.w_c / (4.0 * T);
      double sum = 0.0;
      for (int j = 0; j < T; ++j) {
        const auto& c = data_.contacts[static_cast<size_t>(j)];
        for (int k = 0; k < kNumFootParts; ++k) {
          if (!c[static_cast<size_t>(k)]) continue;
          const int nk = part_size_[static_cast<size_t>(k)];
          double part = 0.0;
          for (int n = 0; n < nk; ++n) {
            const int idx = part_begin_[static_cast<size_t>(k)] + n;
            const Vec3 e = st[static_cast<size_t>(j)].markers[static_cast<size_t>(idx)] - targets.at(j, idx);
            const double n2 = e.squaredNorm();
            part += smooth_norm(n2, mu_);
            if (grad && coef != 0.0) {
              marker_grad[static_cast<size_t>(j * M + idx)] += (coef / nk) * e / std::sqrt(n2 + mu_ * mu_);
            }
          }
          sum += part / nk;
        }
      }
      raw.contact = sum / (4.0 * T);
    }

    if (T >= 2) {
      const double coef = w_.w_sc * w_.w_v / (4.0 * (T - 1));
      double sum = 0.0;
      for (int j = 0; j + 1 < T; ++j) {
        const auto& c0 = data_.contacts[static_cast<size_t>(j)];
        const auto& c1 = data_.contacts[static_cast<size_t>(j + 1)];
        for (int k = 0; k < kNumFootParts; ++k) {
          if (!c0[static_cast<size_t>(k)] || !c1[static_cast<size_t>(k)]) continue;
          const int nk = part_size_[static_cast<size_t>(k)];
          double part = 0.0;
          for (int n = 0; n < nk; ++n) {
            const int idx = part_begin_[static_cast<size_t>(k)] + n;
            const Vec3 e = st[static_cast<size_t>(j)].markers[static_cast<size_t>(idx)] -
                           st[static_cast<size_t>(j + 1)].markers[static_cast<size_t>(idx)];
            const double n2 = e.squaredNorm();
            part += smooth_norm(n2, mu_);
            if (grad && coef != 0.0) {
              const Vec3 g = (coef / nk) * e / std::sqrt(n2 + mu_ * mu_);
              marker_grad[static_cast<size_t>(j * M + idx)] += g;
              marker_grad[static_cast<size_t>((j + 1) * M + idx)] -= g;
            }
          }
          sum += part / nk;
        }
      }
      raw.slide = sum / (4.0 * (T - 1));
    }

    EnergyBreakdown out = weigh(raw, w_);
    if (!std::isfinite(out.total)) throw Error(Errc::non_finite_energy, "objective is not finite");
    if (!grad) return out;

    for (int j = 0; j < T; ++j) {
      auto& tj = tau[static_cast<size_t>(j)];
      const auto& f = st[static_cast<size_t>(j)];
      for (int n = 0; n < M; ++n) {
        const Vec3& g = marker_grad[static_cast<size_t>(j * M + n)];
        if (g.isZero(0.0)) continue;
        grad->segment<3>(kFrameVars * j + kPoseDim) += g;
        const Vec3& x = f.markers[static_cast<size_t>(n)];
        for (int i : sk_.chain_to(markers_[static_cast<size_t>(n)].joint)) {
          tj[static_cast<size_t>(i)] += (x - f.fk.position[static_cast<size_t>(i)]).cross(g);
        }
      }
      for (int i = 0; i < kNumJoints; ++i) {
        const Vec3& t = tj[static_cast<size_t>(i)];
        if (t.isZero(0.0)) continue;
        const Vec3 local = f.fk.rotation[static_cast<size_t>(i)].transpose() * t;
        grad->segment<3>(kFrameVars * j + 3 * i) +=
            so3::right_jacobian(vars.segment<3>(kFrameVars * j + 3 * i)).transpose() * local;
      }
    }
    return out;
  }

  const Skeleton& sk_;
  BatchData data_;
  Weights w_;
  Mat3 rhc_;
  const SceneIndex* scene_;
  double mu_;
  std::vector<FootMarker> markers_;
  std::array<int, kNumFootParts> part_begin_{};
  std::array<int, kNumFootParts> part_size_{};
};

}  // namespace egofuse
